//! Symmetric interior penalty (SIPG) discretization of `-div(K grad u) = f`.
//!
//! The bilinear form collects, per element, `(K grad u, grad v)_K` and, per
//! interior or Dirichlet face, `-({K grad u} - sigma [u], [v]) - ({K grad v}, [u])`
//! with `sigma = C_W K_gamma p_gamma^2 / h_gamma`. Neumann faces contribute
//! nothing (homogeneous flux).

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dgspace::{quadrature, reference_basis, DgSpace, Domain};
use crate::error::{Error, Result};
use crate::mesh::{build_face_topology, Face, FaceKind, Mesh, Point};
use crate::sparse::CsrMatrix;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type BoundaryPredicate = Arc<dyn Fn(Point) -> bool + Send + Sync>;

pub const DEFAULT_PENALTY: f64 = 20.0;

/// Piecewise-constant diffusion, one value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    values: Vec<f64>,
    min: f64,
    max: f64,
}

impl DiffusionField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::Data(format!(
                "diffusion must be positive and finite, element {k} has {v}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Data("empty diffusion field".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(0.0, f64::max);
        Ok(Self { values, min, max })
    }

    pub fn constant(n_elements: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n_elements])
    }

    pub fn from_materials(mesh: &Mesh, f: impl Fn(u32) -> f64) -> Result<Self> {
        Self::new(mesh.materials().iter().map(|&m| f(m)).collect())
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lower bound of the field.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// Upper bound of the field.
    pub fn max(&self) -> f64 {
        self.max
    }

    /// `max / min`.
    pub fn contrast(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Clone)]
pub struct AssemblyConfig {
    /// Penalty constant `C_W`.
    pub penalty: f64,
    pub dirichlet_data: ScalarFn,
    pub source: ScalarFn,
    /// Classifies boundary faces by midpoint; `false` means homogeneous Neumann.
    pub is_dirichlet: BoundaryPredicate,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            penalty: DEFAULT_PENALTY,
            dirichlet_data: Arc::new(|_| 0.0),
            source: Arc::new(|_| 0.0),
            is_dirichlet: Arc::new(|_| true),
        }
    }
}

impl std::fmt::Debug for AssemblyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssemblyConfig")
            .field("penalty", &self.penalty)
            .finish_non_exhaustive()
    }
}

impl AssemblyConfig {
    pub fn faces(&self, mesh: &Mesh) -> Result<Vec<Face>> {
        let pred = self.is_dirichlet.clone();
        build_face_topology(mesh, move |x| pred(x))
    }

    fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config(format!(
                "penalty constant must be positive, got {}",
                self.penalty
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Face penalty `C_W K_gamma p_gamma^2 / h_gamma`, with `K_gamma` and `p_gamma`
/// the maxima over the incident elements.
pub fn face_penalty(face: &Face, space: &DgSpace, diffusion: &DiffusionField, penalty: f64) -> f64 {
    let (k, p) = match face.right {
        Some(r) => (
            diffusion.value(face.left).max(diffusion.value(r)),
            space.degree(face.left).max(space.degree(r)),
        ),
        None => (diffusion.value(face.left), space.degree(face.left)),
    };
    penalty * k * (p * p) as f64 / face.h
}

fn check_inputs(mesh: &Mesh, space: &DgSpace, diffusion: &DiffusionField) -> Result<()> {
    Error::check_len(mesh.n_elements(), space.n_elements())?;
    Error::check_len(mesh.n_elements(), diffusion.values().len())
}

/// Basis values and physical gradients of element `k` at physical point `x`.
struct Trace {
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl Trace {
    fn new(mesh: &Mesh, space: &DgSpace, k: usize, x: Point) -> Self {
        let map = mesh.element_map(k);
        let basis = reference_basis(space.degree(k));
        let mut values = vec![0.0; basis.len()];
        let mut grads = vec![[0.0; 2]; basis.len()];
        basis.eval_into(map.to_reference(x), &mut values, &mut grads);
        for g in &mut grads {
            *g = map.gradient(*g);
        }
        Self { values, grads }
    }

    fn normal_derivs(&self, n: Point) -> Vec<f64> {
        self.grads
            .iter()
            .map(|g| g[0] * n[0] + g[1] * n[1])
            .collect()
    }
}

type Triplets = Vec<(usize, usize, f64)>;

/// Copies the upper triangle of a row-major `n x n` block onto the lower one,
/// making local blocks exactly symmetric.
fn mirror_upper(block: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            block[i * n + j] = block[j * n + i];
        }
    }
}

fn element_terms(
    mesh: &Mesh,
    space: &DgSpace,
    diffusion: &DiffusionField,
    source: &ScalarFn,
    k: usize,
) -> (Triplets, Vec<f64>) {
    let p = space.degree(k);
    let basis = reference_basis(p);
    let n = basis.len();
    let map = mesh.element_map(k);
    let kk = diffusion.value(k);
    let mut block = vec![0.0; n * n];
    let mut load = vec![0.0; n];
    let mut vals = vec![0.0; n];
    let mut grads = vec![[0.0; 2]; n];

    let stiff_rule = quadrature(Domain::Triangle, 2 * p).expect("degree within range");
    for (xi, w) in stiff_rule.iter() {
        basis.eval_into(xi, &mut vals, &mut grads);
        let g: Vec<Point> = grads.iter().map(|&g| map.gradient(g)).collect();
        let wk = w * map.det * kk;
        for i in 0..n {
            for j in 0..n {
                block[i * n + j] += wk * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    let load_rule = quadrature(Domain::Triangle, 2 * p + 2).expect("degree within range");
    for (xi, w) in load_rule.iter() {
        basis.values_into(xi, &mut vals);
        let f = source(map.to_physical(xi)) * w * map.det;
        for i in 0..n {
            load[i] += f * vals[i];
        }
    }

    mirror_upper(&mut block, n);
    let off = space.offset(k);
    let mut trips = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            trips.push((off + i, off + j, block[i * n + j]));
        }
    }
    (trips, load)
}

fn face_terms(
    mesh: &Mesh,
    space: &DgSpace,
    diffusion: &DiffusionField,
    config: &AssemblyConfig,
    face: &Face,
) -> (Triplets, Vec<(usize, f64)>) {
    let sigma = face_penalty(face, space, diffusion, config.penalty);
    let nrm = face.normal;
    let mut trips = Vec::new();
    let mut load = Vec::new();
    match face.right {
        Some(r) => {
            let sides = [(face.left, 1.0), (r, -1.0)];
            let p = space.degree(face.left).max(space.degree(r));
            let rule = quadrature(Domain::Segment, 2 * p + 1).expect("degree within range");
            let sizes = sides.map(|(k, _)| space.n_local(k));
            let mut blocks: Vec<Vec<f64>> = (0..4)
                .map(|b| vec![0.0; sizes[b / 2] * sizes[b % 2]])
                .collect();
            for (t, w) in rule.iter() {
                let x = face.point_at(t[0]);
                let wl = w * face.length;
                let traces = sides.map(|(k, _)| Trace::new(mesh, space, k, x));
                let dn = [traces[0].normal_derivs(nrm), traces[1].normal_derivs(nrm)];
                for s in 0..2 {
                    let (ks, sign_s) = sides[s];
                    let kap_s = diffusion.value(ks);
                    for t in 0..2 {
                        let (kt, sign_t) = sides[t];
                        let kap_t = diffusion.value(kt);
                        let nt = sizes[t];
                        let block = &mut blocks[2 * s + t];
                        for i in 0..sizes[s] {
                            let vi = traces[s].values[i];
                            let dvi = dn[s][i];
                            for j in 0..nt {
                                let uj = traces[t].values[j];
                                let duj = dn[t][j];
                                block[i * nt + j] += wl
                                    * (-0.5 * kap_t * duj * sign_s * vi
                                        - 0.5 * kap_s * dvi * sign_t * uj
                                        + sigma * sign_s * sign_t * vi * uj);
                            }
                        }
                    }
                }
            }
            mirror_upper(&mut blocks[0], sizes[0]);
            mirror_upper(&mut blocks[3], sizes[1]);
            for i in 0..sizes[0] {
                for j in 0..sizes[1] {
                    blocks[2][j * sizes[0] + i] = blocks[1][i * sizes[1] + j];
                }
            }
            for s in 0..2 {
                for t in 0..2 {
                    let (ro, co) = (space.offset(sides[s].0), space.offset(sides[t].0));
                    let nt = sizes[t];
                    for (idx, &v) in blocks[2 * s + t].iter().enumerate() {
                        trips.push((ro + idx / nt, co + idx % nt, v));
                    }
                }
            }
        }
        None if face.kind == FaceKind::Dirichlet => {
            let k = face.left;
            let p = space.degree(k);
            let n = space.n_local(k);
            let kap = diffusion.value(k);
            let rule = quadrature(Domain::Segment, 2 * p + 1).expect("degree within range");
            let mut block = vec![0.0; n * n];
            let mut rhs = vec![0.0; n];
            for (t, w) in rule.iter() {
                let x = face.point_at(t[0]);
                let wl = w * face.length;
                let tr = Trace::new(mesh, space, k, x);
                let dn = tr.normal_derivs(nrm);
                let ud = (config.dirichlet_data)(x);
                for i in 0..n {
                    let (vi, dvi) = (tr.values[i], dn[i]);
                    for j in 0..n {
                        let (uj, duj) = (tr.values[j], dn[j]);
                        block[i * n + j] +=
                            wl * (-kap * duj * vi - kap * dvi * uj + sigma * vi * uj);
                    }
                    rhs[i] += wl * (-kap * dvi * ud + sigma * ud * vi);
                }
            }
            mirror_upper(&mut block, n);
            let off = space.offset(k);
            for (idx, &v) in block.iter().enumerate() {
                trips.push((off + idx / n, off + idx % n, v));
            }
            load.extend(rhs.into_iter().enumerate().map(|(i, v)| (off + i, v)));
        }
        None => {}
    }
    (trips, load)
}

/// Assembles the SIPG matrix and right-hand side.
pub fn assemble_system(
    mesh: &Mesh,
    space: &DgSpace,
    diffusion: &DiffusionField,
    config: &AssemblyConfig,
) -> Result<SparseSystem> {
    check_inputs(mesh, space, diffusion)?;
    config.validate()?;
    let faces = config.faces(mesh)?;
    let n = space.n_dofs();

    let elems: Vec<(Triplets, Vec<f64>)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| element_terms(mesh, space, diffusion, &config.source, k))
        .collect();
    let face_parts: Vec<(Triplets, Vec<(usize, f64)>)> = faces
        .par_iter()
        .map(|f| face_terms(mesh, space, diffusion, config, f))
        .collect();

    let total = elems.iter().map(|e| e.0.len()).sum::<usize>()
        + face_parts.iter().map(|f| f.0.len()).sum::<usize>();
    let mut trips = Vec::with_capacity(total);
    let mut rhs = vec![0.0; n];
    for (k, (t, load)) in elems.into_iter().enumerate() {
        trips.extend(t);
        for (i, v) in space.dofs(k).zip(load) {
            rhs[i] += v;
        }
    }
    for (t, load) in face_parts {
        trips.extend(t);
        for (i, v) in load {
            rhs[i] += v;
        }
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, n, &trips),
        rhs,
    })
}

/// Squared contributions to the DG norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgNormParts {
    /// `sum_K ||sqrt(K) grad v||^2`
    pub gradient: f64,
    /// `sum over interior faces of ||sqrt(sigma) [v]||^2`
    pub interior_jumps: f64,
    /// `sum over Dirichlet faces of ||sqrt(sigma) v||^2`
    pub boundary_jumps: f64,
}

impl DgNormParts {
    pub fn norm(&self) -> f64 {
        (self.gradient + self.interior_jumps + self.boundary_jumps).sqrt()
    }
}

pub fn dg_norm_parts(
    mesh: &Mesh,
    space: &DgSpace,
    diffusion: &DiffusionField,
    config: &AssemblyConfig,
    v: &[f64],
) -> Result<DgNormParts> {
    check_inputs(mesh, space, diffusion)?;
    Error::check_len(space.n_dofs(), v.len())?;
    let gradient: f64 = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let p = space.degree(k);
            let basis = reference_basis(p);
            let map = mesh.element_map(k);
            let coeffs = &v[space.dofs(k)];
            let mut vals = vec![0.0; basis.len()];
            let mut grads = vec![[0.0; 2]; basis.len()];
            let mut acc = 0.0;
            for (xi, w) in quadrature(Domain::Triangle, 2 * p)
                .expect("degree within range")
                .iter()
            {
                basis.eval_into(xi, &mut vals, &mut grads);
                let mut g = [0.0; 2];
                for (c, gr) in coeffs.iter().zip(&grads) {
                    g[0] += c * gr[0];
                    g[1] += c * gr[1];
                }
                let g = map.gradient(g);
                acc += w * map.det * (g[0] * g[0] + g[1] * g[1]);
            }
            diffusion.value(k) * acc
        })
        .sum();

    let mut interior_jumps = 0.0;
    let mut boundary_jumps = 0.0;
    for face in config.faces(mesh)?.iter().filter(|f| f.is_penalized()) {
        let sigma = face_penalty(face, space, diffusion, config.penalty);
        let p = match face.right {
            Some(r) => space.degree(face.left).max(space.degree(r)),
            None => space.degree(face.left),
        };
        let mut acc = 0.0;
        for (t, w) in quadrature(Domain::Segment, 2 * p)
            .expect("degree within range")
            .iter()
        {
            let x = face.point_at(t[0]);
            let left = evaluate_in_element(mesh, space, v, face.left, x);
            let jump = match face.right {
                Some(r) => left - evaluate_in_element(mesh, space, v, r, x),
                None => left,
            };
            acc += w * face.length * jump * jump;
        }
        if face.right.is_some() {
            interior_jumps += sigma * acc;
        } else {
            boundary_jumps += sigma * acc;
        }
    }
    Ok(DgNormParts {
        gradient,
        interior_jumps,
        boundary_jumps,
    })
}

/// DG norm for piecewise-constant diffusion: broken `sqrt(K)`-weighted
/// gradient plus penalty-weighted jumps over interior and Dirichlet faces.
pub fn dg_norm(
    mesh: &Mesh,
    space: &DgSpace,
    diffusion: &DiffusionField,
    config: &AssemblyConfig,
    v: &[f64],
) -> Result<f64> {
    Ok(dg_norm_parts(mesh, space, diffusion, config, v)?.norm())
}

/// Value of the discrete function `v` restricted to element `k` at physical point `x`.
pub fn evaluate_in_element(mesh: &Mesh, space: &DgSpace, v: &[f64], k: usize, x: Point) -> f64 {
    let basis = reference_basis(space.degree(k));
    let mut vals = vec![0.0; basis.len()];
    basis.values_into(mesh.element_map(k).to_reference(x), &mut vals);
    vals.iter().zip(&v[space.dofs(k)]).map(|(a, b)| a * b).sum()
}

/// Elementwise L² projection onto `S_hp`, integrating with exactness
/// `2 p_K + extra_exactness`.
pub fn l2_project(
    mesh: &Mesh,
    space: &DgSpace,
    f: impl Fn(Point) -> f64 + Sync,
    extra_exactness: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs()];
    let parts: Vec<Vec<f64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let p = space.degree(k);
            let basis = reference_basis(p);
            let map = mesh.element_map(k);
            let rule = quadrature(
                Domain::Triangle,
                (2 * p + extra_exactness).min(crate::dgspace::MAX_EXACTNESS - 1),
            )
            .expect("clamped");
            let mut vals = vec![0.0; basis.len()];
            let mut c = vec![0.0; basis.len()];
            // orthonormal reference basis: element mass matrix is det(J) I
            for (xi, w) in rule.iter() {
                basis.values_into(xi, &mut vals);
                let fx = f(map.to_physical(xi)) * w;
                for (ci, vi) in c.iter_mut().zip(&vals) {
                    *ci += fx * vi;
                }
            }
            c
        })
        .collect();
    for (k, c) in parts.into_iter().enumerate() {
        out[space.dofs(k)].copy_from_slice(&c);
    }
    out
}

/// `||v_h - exact||_{L²(Ω)}` with per-element exactness `2 p_K + 2`.
pub fn l2_error(
    mesh: &Mesh,
    space: &DgSpace,
    v: &[f64],
    exact: impl Fn(Point) -> f64 + Sync,
) -> Result<f64> {
    Error::check_len(space.n_dofs(), v.len())?;
    let sum: f64 = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let p = space.degree(k);
            let basis = reference_basis(p);
            let map = mesh.element_map(k);
            let coeffs = &v[space.dofs(k)];
            let mut vals = vec![0.0; basis.len()];
            let mut acc = 0.0;
            for (xi, w) in quadrature(Domain::Triangle, 2 * p + 2)
                .expect("degree within range")
                .iter()
            {
                basis.values_into(xi, &mut vals);
                let vh: f64 = vals.iter().zip(coeffs).map(|(a, b)| a * b).sum();
                let e = vh - exact(map.to_physical(xi));
                acc += w * map.det * e * e;
            }
            acc
        })
        .sum();
    Ok(sum.sqrt())
}

/// `sum_{i,j=1..3} sin(2 pi i x1) sin(2 pi j x2)`.
pub fn oscillatory_function(x: Point) -> f64 {
    let sx: f64 = (1..=3).map(|i| (2.0 * PI * i as f64 * x[0]).sin()).sum();
    let sy: f64 = (1..=3).map(|j| (2.0 * PI * j as f64 * x[1]).sin()).sum();
    sx * sy
}

/// L² projection of the oscillatory function used as the initial iterate.
pub fn oscillatory_initial_guess(mesh: &Mesh, space: &DgSpace) -> Vec<f64> {
    l2_project(mesh, space, oscillatory_function, 24)
}

/// Model problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchmarkProblem {
    /// `-Δu = f` on the unit square with homogeneous Dirichlet data and exact
    /// solution `u = x1(1-x1)x2(1-x2)`, i.e. `f = 2x1(1-x1) + 2x2(1-x2)`.
    Laplace,
    /// Three horizontal material bands; the middle band has diffusion `1/zeta`.
    Stripes { zeta: f64 },
}

pub fn build_benchmark_problem(name: &str, zeta: f64) -> Result<BenchmarkProblem> {
    match name {
        "laplace" => Ok(BenchmarkProblem::Laplace),
        "stripes" => {
            if !(zeta >= 1.0 && zeta.is_finite()) {
                return Err(Error::Config(format!(
                    "contrast zeta must be >= 1, got {zeta}"
                )));
            }
            Ok(BenchmarkProblem::Stripes { zeta })
        }
        other => Err(Error::Config(format!(
            "unknown problem `{other}` (expected laplace or stripes)"
        ))),
    }
}

const STRIPES_SOURCE: f64 = 5e4;

impl BenchmarkProblem {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkProblem::Laplace => "laplace",
            BenchmarkProblem::Stripes { .. } => "stripes",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            BenchmarkProblem::Laplace => 1e-12,
            BenchmarkProblem::Stripes { .. } => 1e-10,
        }
    }

    /// Material id of a point (by element centroid for meshes).
    pub fn material_at(&self, x: Point) -> u32 {
        match self {
            BenchmarkProblem::Laplace => 0,
            BenchmarkProblem::Stripes { .. } => (x[1] > 1.0 / 3.0 && x[1] < 2.0 / 3.0) as u32,
        }
    }

    pub fn assign_materials(&self, mesh: Mesh) -> Mesh {
        let this = *self;
        mesh.with_materials(move |c| this.material_at(c))
    }

    pub fn diffusion(&self, mesh: &Mesh) -> Result<DiffusionField> {
        match *self {
            BenchmarkProblem::Laplace => DiffusionField::constant(mesh.n_elements(), 1.0),
            BenchmarkProblem::Stripes { zeta } => {
                DiffusionField::from_materials(mesh, |m| if m == 1 { 1.0 / zeta } else { 1.0 })
            }
        }
    }

    pub fn config(&self, penalty: f64) -> AssemblyConfig {
        match self {
            BenchmarkProblem::Laplace => AssemblyConfig {
                penalty,
                source: Arc::new(|x| 2.0 * x[0] * (1.0 - x[0]) + 2.0 * x[1] * (1.0 - x[1])),
                ..AssemblyConfig::default()
            },
            BenchmarkProblem::Stripes { .. } => AssemblyConfig {
                penalty,
                source: Arc::new(|_| STRIPES_SOURCE),
                // Neumann on x2 = 0 and x1 = 0
                is_dirichlet: Arc::new(|x| x[0] > 1e-12 && x[1] > 1e-12),
                ..AssemblyConfig::default()
            },
        }
    }

    pub fn exact_solution(&self) -> Option<fn(Point) -> f64> {
        match self {
            BenchmarkProblem::Laplace => Some(laplace_exact),
            BenchmarkProblem::Stripes { .. } => None,
        }
    }
}

pub fn laplace_exact(x: Point) -> f64 {
    x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
}
