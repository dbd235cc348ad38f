//! Coarse polynomial space on agglomerates and its injection into the fine DG space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dgspace::{n_basis, quadrature, reference_basis, DgSpace, Domain};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::partition::Partition;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct CoarseOptions {
    /// Orthonormalize each agglomerate's basis in L².
    pub orthonormalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub center: Point,
    pub half_widths: [f64; 2],
}

impl BoundingBox {
    fn of(points: impl Iterator<Item = Point>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        Self {
            center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            half_widths: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
        }
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_widths[0].hypot(self.half_widths[1])
    }

    fn scaled(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) / self.half_widths[0],
            (x[1] - self.center[1]) / self.half_widths[1],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct CoarseSpace {
    degrees: Vec<usize>,
    boxes: Vec<BoundingBox>,
    offsets: Vec<usize>,
    /// Per agglomerate: row `i` holds monomial coefficients of coarse function `i`.
    transforms: Vec<DMatrix<f64>>,
    injection: CsrMatrix,
    restriction: CsrMatrix,
    matrix: CsrMatrix,
}

fn monomial_exponents(q: usize) -> Vec<(usize, usize)> {
    (0..=q)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

fn monomials(q: usize, s: Point, out: &mut [f64]) {
    for (v, (a, b)) in out.iter_mut().zip(monomial_exponents(q)) {
        *v = s[0].powi(a as i32) * s[1].powi(b as i32);
    }
}

impl CoarseSpace {
    /// Builds the coarse space for `partition` and the Galerkin matrix `R₀ A R₀ᵀ`.
    pub fn build(
        mesh: &Mesh,
        space: &DgSpace,
        partition: &Partition,
        a: &CsrMatrix,
        options: CoarseOptions,
    ) -> Result<Self> {
        Error::check_len(mesh.n_elements(), space.n_elements())?;
        Error::check_len(space.n_dofs(), a.nrows())?;
        let groups = partition.agglomerate_elements();
        let degrees: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|&k| space.degree(k)).min().unwrap_or(0))
            .collect();
        let boxes: Vec<BoundingBox> = groups
            .iter()
            .map(|g| BoundingBox::of(g.iter().flat_map(|&k| mesh.corners(k))))
            .collect();
        for (i, (g, b)) in groups.iter().zip(&boxes).enumerate() {
            let area: f64 = g.iter().map(|&k| mesh.area(k)).sum();
            if !(area > 0.0) || b.half_widths[0] <= 0.0 || b.half_widths[1] <= 0.0 {
                return Err(Error::Agglomeration(format!(
                    "agglomerate {i} has zero area"
                )));
            }
        }
        let mut offsets = vec![0];
        for &q in &degrees {
            offsets.push(offsets.last().unwrap() + n_basis(q));
        }
        let n0 = *offsets.last().unwrap();

        // per agglomerate: raw injection coefficients and optional L² transform
        let blocks: Vec<(DMatrix<f64>, Vec<(usize, usize, f64)>)> = groups
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                agglomerate_block(mesh, space, g, degrees[i], &boxes[i], offsets[i], options)
            })
            .collect::<Result<_>>()?;
        let mut transforms = Vec::with_capacity(blocks.len());
        let mut triplets = Vec::new();
        for (t, trip) in blocks {
            transforms.push(t);
            triplets.extend(trip);
        }
        let injection = CsrMatrix::from_triplets(space.n_dofs(), n0, &triplets);
        let restriction = injection.transpose();
        let mut matrix = restriction.matmul(&a.matmul(&injection)?)?;
        symmetrize(&mut matrix);
        Ok(Self {
            degrees,
            boxes,
            offsets,
            transforms,
            injection,
            restriction,
            matrix,
        })
    }

    pub fn n0(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_agglomerates(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn bounding_boxes(&self) -> &[BoundingBox] {
        &self.boxes
    }

    /// Largest agglomerate diameter (bounding-box diagonal).
    pub fn max_diameter(&self) -> f64 {
        self.boxes
            .iter()
            .map(BoundingBox::diagonal)
            .fold(0.0, f64::max)
    }

    /// `R₀ᵀ`, of size `n_dofs × n0`.
    pub fn injection(&self) -> &CsrMatrix {
        &self.injection
    }

    /// `R₀`, of size `n0 × n_dofs`.
    pub fn restriction(&self) -> &CsrMatrix {
        &self.restriction
    }

    /// `A₀ = R₀ A R₀ᵀ`.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn restrict(&self, fine: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.injection.nrows(), fine.len())?;
        Ok(self.restriction.mul_vec(fine))
    }

    pub fn prolong(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n0(), coarse.len())?;
        Ok(self.injection.mul_vec(coarse))
    }

    /// Agglomerate owning coarse function `j`.
    pub fn owner(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    /// Value of coarse basis function `j` at `x` (taken on the owning agglomerate).
    pub fn eval_basis_function(&self, j: usize, x: Point) -> f64 {
        let i = self.owner(j);
        let q = self.degrees[i];
        let mut m = vec![0.0; n_basis(q)];
        monomials(q, self.boxes[i].scaled(x), &mut m);
        let row = self.transforms[i].row(j - self.offsets[i]);
        row.iter().zip(&m).map(|(c, v)| c * v).sum()
    }
}

fn agglomerate_block(
    mesh: &Mesh,
    space: &DgSpace,
    elements: &[usize],
    q: usize,
    bbox: &BoundingBox,
    offset: usize,
    options: CoarseOptions,
) -> Result<(DMatrix<f64>, Vec<(usize, usize, f64)>)> {
    let nq = n_basis(q);
    // coefficients of each raw monomial in the fine basis, per element
    let mut local: Vec<(usize, DMatrix<f64>)> = Vec::with_capacity(elements.len());
    let mut gram = DMatrix::<f64>::zeros(nq, nq);
    let mut mono = vec![0.0; nq];
    for &k in elements {
        let p = space.degree(k);
        let basis = reference_basis(p);
        let rule = quadrature(Domain::Triangle, 2 * p)?;
        let map = mesh.element_map(k);
        let nk = space.n_local(k);
        let mut c = DMatrix::<f64>::zeros(nq, nk);
        let mut phi = vec![0.0; nk];
        for (xi, w) in rule.iter() {
            monomials(q, bbox.scaled(map.to_physical(xi)), &mut mono);
            basis.values_into(xi, &mut phi);
            for a in 0..nq {
                for b in 0..nk {
                    c[(a, b)] += w * mono[a] * phi[b];
                }
            }
        }
        // the fine basis is orthonormal on the reference element
        gram += (&c * c.transpose()) * map.det.abs();
        local.push((k, c));
    }
    let transform = if options.orthonormalize {
        let l = gram
            .cholesky()
            .ok_or_else(|| Error::Agglomeration("singular coarse mass matrix".into()))?
            .unpack();
        l.solve_lower_triangular(&DMatrix::identity(nq, nq))
            .ok_or_else(|| Error::Agglomeration("singular coarse mass matrix".into()))?
    } else {
        DMatrix::identity(nq, nq)
    };
    let mut triplets = Vec::new();
    for (k, c) in &local {
        let coeffs = &transform * c;
        let start = space.offset(*k);
        for a in 0..nq {
            for b in 0..c.ncols() {
                let v = coeffs[(a, b)];
                if v != 0.0 {
                    triplets.push((start + b, offset + a, v));
                }
            }
        }
    }
    Ok((transform, triplets))
}

/// Replaces `M` by `(M + Mᵀ)/2` entrywise (pattern is already symmetric).
fn symmetrize(m: &mut CsrMatrix) {
    let t = m.transpose();
    let trip: Vec<_> = m
        .triplets()
        .map(|(i, j, v)| (i, j, 0.5 * (v + t.get(i, j))))
        .collect();
    *m = CsrMatrix::from_triplets(m.nrows(), m.ncols(), &trip);
}

/// Max deviation between prolonged coarse functions and their pointwise values
/// over all element quadrature points.
pub fn nesting_defect(
    mesh: &Mesh,
    space: &DgSpace,
    partition: &Partition,
    coarse: &CoarseSpace,
) -> Result<f64> {
    let groups = partition.agglomerate_elements();
    let worst = (0..coarse.n0())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let mut e = vec![0.0; coarse.n0()];
            e[j] = 1.0;
            let fine = coarse.prolong(&e)?;
            let mut worst: f64 = 0.0;
            for &k in &groups[coarse.owner(j)] {
                let p = space.degree(k);
                let basis = reference_basis(p);
                let map = mesh.element_map(k);
                let coeffs = &fine[space.dofs(k)];
                let mut phi = vec![0.0; coeffs.len()];
                for (xi, _) in quadrature(Domain::Triangle, 2 * p)?.iter() {
                    basis.values_into(xi, &mut phi);
                    let v: f64 = phi.iter().zip(coeffs).map(|(a, b)| a * b).sum();
                    worst =
                        worst.max((v - coarse.eval_basis_function(j, map.to_physical(xi))).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_square_mesh;
    use crate::sipg::{assemble_system, evaluate_in_element, AssemblyConfig, DiffusionField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, p: usize, parts: usize, m: usize) -> (Mesh, DgSpace, Partition, CsrMatrix) {
        let mesh = build_uniform_square_mesh(n);
        let part = Partition::build(&mesh, parts, m, false, 0).unwrap();
        let space = DgSpace::uniform(&mesh, p, Some(part.subdomain_of())).unwrap();
        let k = DiffusionField::constant(mesh.n_elements(), 1.0).unwrap();
        let a = assemble_system(&mesh, &space, &k, &AssemblyConfig::default())
            .unwrap()
            .matrix;
        (mesh, space, part, a)
    }

    #[test]
    fn constants_reproduced() {
        let (mesh, space, part, a) = setup(4, 2, 3, 2);
        let cs = CoarseSpace::build(&mesh, &space, &part, &a, CoarseOptions::default()).unwrap();
        for (i, g) in part.agglomerate_elements().iter().enumerate() {
            let mut e = vec![0.0; cs.n0()];
            e[cs.offsets[i]] = 1.0;
            let fine = cs.prolong(&e).unwrap();
            for k in 0..mesh.n_elements() {
                let expect = if g.contains(&k) { 1.0 } else { 0.0 };
                let map = mesh.element_map(k);
                for (xi, _) in quadrature(Domain::Triangle, 4).unwrap().iter() {
                    let v = evaluate_in_element(&mesh, &space, &fine, k, map.to_physical(xi));
                    assert!((v - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_agglomerate_dimension() {
        for p in 1..=3 {
            let (mesh, space, part, a) = setup(3, p, 1, 1);
            let cs =
                CoarseSpace::build(&mesh, &space, &part, &a, CoarseOptions::default()).unwrap();
            assert_eq!(cs.n0(), (p + 1) * (p + 2) / 2);
            assert!(cs.n0() < space.n_dofs());
        }
    }

    #[test]
    fn four_agglomerates_linear() {
        let (mesh, space, part, a) = setup(4, 1, 4, 1);
        let cs = CoarseSpace::build(&mesh, &space, &part, &a, CoarseOptions::default()).unwrap();
        assert_eq!(cs.n0(), 12);
        let a0 = cs.matrix().to_dense();
        assert_eq!(a0.nrows(), 12);
        assert!(cs.matrix().relative_asymmetry() <= 1e-12);
        let eig = a0.symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&l| l > 0.0), "{eig}");
    }

    #[test]
    fn galerkin_identity_and_transfer() {
        let (mesh, space, part, a) = setup(4, 2, 4, 2);
        let cs = CoarseSpace::build(&mesh, &space, &part, &a, CoarseOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r0t = cs.injection().to_dense();
        for _ in 0..5 {
            let c: Vec<f64> = (0..cs.n0()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..cs.n0()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = crate::sparse::dot(&cs.matrix().mul_vec(&c), &d);
            let fc = cs.prolong(&c).unwrap();
            let rhs = crate::sparse::dot(&a.mul_vec(&fc), &cs.prolong(&d).unwrap());
            assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0));
            let back = cs.restrict(&fc).unwrap();
            let dense = r0t.transpose() * (&r0t * nalgebra::DVector::from_vec(c.clone()));
            for (x, y) in back.iter().zip(dense.iter()) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
        assert!(cs
            .prolong(&vec![0.0; cs.n0()])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(cs
            .restrict(&vec![0.0; space.n_dofs()])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(cs.prolong(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn exact_nesting() {
        for opts in [
            CoarseOptions::default(),
            CoarseOptions {
                orthonormalize: true,
            },
        ] {
            let (mesh, space, part, a) = setup(6, 3, 3, 3);
            let cs = CoarseSpace::build(&mesh, &space, &part, &a, opts).unwrap();
            assert!(nesting_defect(&mesh, &space, &part, &cs).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn orthonormal_option_gives_identity_mass() {
        let (mesh, space, part, a) = setup(4, 2, 2, 1);
        let cs = CoarseSpace::build(
            &mesh,
            &space,
            &part,
            &a,
            CoarseOptions {
                orthonormalize: true,
            },
        )
        .unwrap();
        // fine mass matrix is diag(|det J|)
        let mut mass = vec![0.0; space.n_dofs()];
        for k in 0..mesh.n_elements() {
            let d = mesh.element_map(k).det.abs();
            for i in space.dofs(k) {
                mass[i] = d;
            }
        }
        let r = cs.injection().to_dense();
        let m0 = r.transpose()
            * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(mass))
            * &r;
        assert!((m0 - DMatrix::identity(cs.n0(), cs.n0())).amax() < 1e-10);
    }
}
