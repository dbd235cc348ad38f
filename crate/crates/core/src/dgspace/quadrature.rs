//! Gauss rules on the unit segment and the reference triangle.
//!
//! Triangle rules use the collapsed (Duffy) map `x = u (1 - v), y = v`; the
//! `(1 - v)` Jacobian is absorbed into a Gauss–Jacobi(1, 0) rule in `v`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Rules are available for exactness `0..MAX_EXACTNESS`.
pub const MAX_EXACTNESS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Reference triangle with vertices (0,0), (1,0), (0,1).
    Triangle,
    /// Unit segment [0, 1]; points use the first coordinate only.
    Segment,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

/// Gauss–Jacobi nodes and weights on [-1, 1] for weight `(1-x)^alpha (1+x)^beta`
/// (Golub–Welsch).
fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        t[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let b = (4.0 * m * (m + alpha) * (m + beta) * (m + ab)
                / (s * s * (s + 1.0) * (s - 1.0)))
                .sqrt();
            t[(k, k + 1)] = b;
            t[(k + 1, k)] = b;
        }
    }
    // mu0 = int_{-1}^{1} (1-x)^alpha (1+x)^beta dx, for the integer exponents used here.
    let mu0 = 2f64.powf(ab + 1.0) * factorial(alpha) * factorial(beta) / factorial(ab + 1.0);
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn factorial(x: f64) -> f64 {
    (1..=x.round() as u64).map(|k| k as f64).product()
}

fn segment_rule(exactness: usize) -> QuadratureRule {
    let n = exactness / 2 + 1;
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    QuadratureRule {
        points: x.iter().map(|&x| [(x + 1.0) / 2.0, 0.0]).collect(),
        weights: w.iter().map(|w| w / 2.0).collect(),
        exactness,
    }
}

fn triangle_rule(exactness: usize) -> QuadratureRule {
    let n = exactness / 2 + 1;
    let (xu, wu) = gauss_jacobi(n, 0.0, 0.0);
    let (xv, wv) = gauss_jacobi(n, 1.0, 0.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&v, &wv) in xv.iter().zip(&wv) {
        let v = (v + 1.0) / 2.0;
        for (&u, &wu) in xu.iter().zip(&wu) {
            let u = (u + 1.0) / 2.0;
            points.push([u * (1.0 - v), v]);
            weights.push(wu / 2.0 * wv / 4.0);
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness,
    }
}

static TRIANGLE_RULES: [OnceLock<QuadratureRule>; MAX_EXACTNESS] =
    [const { OnceLock::new() }; MAX_EXACTNESS];
static SEGMENT_RULES: [OnceLock<QuadratureRule>; MAX_EXACTNESS] =
    [const { OnceLock::new() }; MAX_EXACTNESS];

/// Cached rule integrating polynomials of total degree `<= exactness` exactly.
pub fn quadrature(domain: Domain, exactness: usize) -> Result<&'static QuadratureRule> {
    if exactness >= MAX_EXACTNESS {
        return Err(Error::Unsupported(format!(
            "quadrature exactness {exactness} (maximum is {})",
            MAX_EXACTNESS - 1
        )));
    }
    Ok(match domain {
        Domain::Triangle => TRIANGLE_RULES[exactness].get_or_init(|| triangle_rule(exactness)),
        Domain::Segment => SEGMENT_RULES[exactness].get_or_init(|| segment_rule(exactness)),
    })
}
