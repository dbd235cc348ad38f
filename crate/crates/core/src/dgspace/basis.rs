//! L²-orthonormal hierarchical basis on the reference triangle.
//!
//! Monomials in coordinates centered at the reference centroid are ordered by
//! total degree and orthonormalized (Gram–Schmidt realized as a Cholesky
//! factorization of the exact monomial Gram matrix). Because the ordering is
//! graded, the first `dim P^q` functions of the degree-`p` basis are the
//! degree-`q` basis.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::quadrature::{quadrature, Domain};

pub const MAX_DEGREE: usize = 10;

const CENTER: f64 = 1.0 / 3.0;

pub fn n_basis(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

#[derive(Debug)]
pub struct ReferenceBasis {
    degree: usize,
    exponents: Vec<(usize, usize)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
}

fn exponents(p: usize) -> Vec<(usize, usize)> {
    (0..=p)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

fn powers(x: f64, p: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p + 1);
    let mut acc = 1.0;
    for _ in 0..=p {
        out.push(acc);
        acc *= x;
    }
    out
}

impl ReferenceBasis {
    fn build(p: usize) -> Self {
        let exps = exponents(p);
        let n = exps.len();
        let rule = quadrature(Domain::Triangle, 2 * p).expect("degree within quadrature range");
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut m = vec![0.0; n];
        for (pt, w) in rule.iter() {
            let px = powers(pt[0] - CENTER, p);
            let py = powers(pt[1] - CENTER, p);
            for (v, &(a, b)) in m.iter_mut().zip(&exps) {
                *v = px[a] * py[b];
            }
            for i in 0..n {
                for j in 0..=i {
                    gram[(i, j)] += w * m[i] * m[j];
                }
            }
        }
        gram.fill_upper_triangle_with_lower_triangle();
        let l = gram
            .clone()
            .cholesky()
            .expect("monomial Gram matrix is SPD")
            .unpack();
        let mut coeffs = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("Cholesky factor is invertible");
        // second Gram–Schmidt pass removes the rounding left by the first
        let residual = &coeffs * &gram * coeffs.transpose();
        let l2 = residual.cholesky().expect("nearly identity").unpack();
        coeffs = l2
            .solve_lower_triangular(&coeffs)
            .expect("Cholesky factor is invertible");
        Self {
            degree: p,
            exponents: exps,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Values and reference gradients of all basis functions at `xi`.
    pub fn eval_into(&self, xi: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let p = self.degree;
        let px = powers(xi[0] - CENTER, p);
        let py = powers(xi[1] - CENTER, p);
        let n = self.len();
        values[..n].fill(0.0);
        grads[..n].fill([0.0; 2]);
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let m = px[a] * py[b];
            let dx = if a > 0 {
                a as f64 * px[a - 1] * py[b]
            } else {
                0.0
            };
            let dy = if b > 0 {
                b as f64 * px[a] * py[b - 1]
            } else {
                0.0
            };
            // coeffs is lower triangular
            for i in j..n {
                let c = self.coeffs[(i, j)];
                values[i] += c * m;
                grads[i][0] += c * dx;
                grads[i][1] += c * dy;
            }
        }
    }

    pub fn eval(&self, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![[0.0; 2]; self.len()];
        self.eval_into(xi, &mut v, &mut g);
        (v, g)
    }

    /// Values only.
    pub fn values_into(&self, xi: [f64; 2], values: &mut [f64]) {
        let p = self.degree;
        let px = powers(xi[0] - CENTER, p);
        let py = powers(xi[1] - CENTER, p);
        let n = self.len();
        values[..n].fill(0.0);
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let m = px[a] * py[b];
            for i in j..n {
                values[i] += self.coeffs[(i, j)] * m;
            }
        }
    }
}

static BASES: [OnceLock<ReferenceBasis>; MAX_DEGREE + 1] =
    [const { OnceLock::new() }; MAX_DEGREE + 1];

/// Cached basis of degree `p` (`1 <= p <= MAX_DEGREE`; degree 0 is allowed for coarse use).
pub fn reference_basis(p: usize) -> &'static ReferenceBasis {
    assert!(
        p <= MAX_DEGREE,
        "polynomial degree {p} exceeds {MAX_DEGREE}"
    );
    BASES[p].get_or_init(|| ReferenceBasis::build(p))
}

/// Values and reference gradients of the degree-`p` basis at `point`.
pub fn eval_basis(p: usize, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    reference_basis(p).eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mode_is_sqrt_two() {
        let (v, _) = eval_basis(1, [1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(v.len(), 3);
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-14);
        let (v, g) = eval_basis(3, [0.1, 0.7]);
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!(g[0][0].abs() < 1e-14 && g[0][1].abs() < 1e-14);
    }

    #[test]
    fn mass_matrix_is_identity() {
        for p in 1..=6 {
            let b = reference_basis(p);
            let rule = quadrature(Domain::Triangle, 2 * p).unwrap();
            let n = b.len();
            let mut mass = vec![0.0; n * n];
            for (pt, w) in rule.iter() {
                let (v, _) = b.eval(pt);
                for i in 0..n {
                    for j in 0..n {
                        mass[i * n + j] += w * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    let tol = if p <= 4 { 1e-12 } else { 1e-9 };
                    assert!(
                        (mass[i * n + j] - expect).abs() < tol,
                        "p={p} ({i},{j}) = {}",
                        mass[i * n + j]
                    );
                }
            }
        }
    }

    #[test]
    fn hierarchical() {
        let (v2, _) = eval_basis(2, [0.2, 0.3]);
        let (v4, _) = eval_basis(4, [0.2, 0.3]);
        for i in 0..v2.len() {
            assert!((v2[i] - v4[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let step = 1e-6;
        for p in 1..=4 {
            for pt in [[0.2, 0.3], [0.6, 0.1], [0.05, 0.9], [1.0 / 3.0, 1.0 / 3.0]] {
                let (_, g) = eval_basis(p, pt);
                let (xp, _) = eval_basis(p, [pt[0] + step, pt[1]]);
                let (xm, _) = eval_basis(p, [pt[0] - step, pt[1]]);
                let (yp, _) = eval_basis(p, [pt[0], pt[1] + step]);
                let (ym, _) = eval_basis(p, [pt[0], pt[1] - step]);
                for i in 0..g.len() {
                    let fd = [
                        (xp[i] - xm[i]) / (2.0 * step),
                        (yp[i] - ym[i]) / (2.0 * step),
                    ];
                    for d in 0..2 {
                        let scale = g[i][d].abs().max(1.0);
                        assert!((fd[d] - g[i][d]).abs() <= 1e-6 * scale, "p={p} i={i} d={d}");
                    }
                }
            }
        }
    }
}
