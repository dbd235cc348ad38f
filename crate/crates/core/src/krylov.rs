//! Preconditioned conjugate gradients, stationary Schwarz iterations and
//! Lanczos condition estimates.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schwarz::{Mode, SchwarzPreconditioner};
use crate::sparse::{dot, norm2, CsrMatrix};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Symmetric positive definite approximation of `A⁻¹`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Norm used for the relative residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualNorm {
    /// `‖N⁻¹r‖₂`.
    #[default]
    Preconditioned,
    /// `⟨N⁻¹r, r⟩^{1/2}`.
    Energy,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: ResidualNorm,
}

impl SolveOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            norm: ResidualNorm::Preconditioned,
        }
    }
}

/// `10·√n + 100`.
pub fn default_max_iter(n: usize) -> usize {
    (10.0 * (n as f64).sqrt()).ceil() as usize + 100
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual, starting with 1.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub ritz_min: Option<f64>,
    pub ritz_max: Option<f64>,
    pub kappa_estimate: Option<f64>,
    pub fl: Option<f64>,
    pub comm: Option<f64>,
}

impl SolveReport {
    fn new() -> Self {
        Self {
            iterations: 0,
            residual_history: vec![1.0],
            converged: false,
            diverged: false,
            ritz_min: None,
            ritz_max: None,
            kappa_estimate: None,
            fl: None,
            comm: None,
        }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }

    /// First iteration with relative residual at or below `level`.
    pub fn crossing(&self, level: f64) -> Option<usize> {
        self.residual_history.iter().position(|&r| r <= level)
    }

    /// Two-column `iteration,r_rel` CSV.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,r_rel\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{i},{r:e}\n"));
        }
        s
    }

    pub fn write_history(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.history_csv().as_bytes())?;
        Ok(())
    }
}

/// Eigenvalues of the Lanczos tridiagonal assembled from PCG step sizes
/// `alpha` and direction updates `beta` (`beta.len() >= alpha.len() - 1`).
pub fn lanczos_ritz_values(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    if k == 0 {
        return Vec::new();
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alpha[j]
            + if j > 0 {
                beta[j - 1] / alpha[j - 1]
            } else {
                0.0
            };
        if j + 1 < k {
            let off = beta[j].sqrt() / alpha[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn residual_measure(norm: ResidualNorm, z: &[f64], r: &[f64]) -> f64 {
    match norm {
        ResidualNorm::Preconditioned => norm2(z),
        ResidualNorm::Energy => dot(z, r).max(0.0).sqrt(),
    }
}

/// Relative residuals below this are treated as exact convergence.
const EXHAUSTED: f64 = 1e-15;

/// Preconditioned CG from `x0`, stopping on the relative preconditioned residual.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    g: &[f64],
    precond: &dyn Preconditioner,
    x0: &[f64],
    options: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    Error::check_len(n, g.len())?;
    Error::check_len(n, x0.len())?;
    let mut x = x0.to_vec();
    let mut q = vec![0.0; n];
    a.apply(&x, &mut q);
    let mut r: Vec<f64> = g.iter().zip(&q).map(|(g, q)| g - q).collect();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut rho = dot(&z, &r);
    let mut report = SolveReport::new();
    let norm0 = residual_measure(options.norm, &z, &r);
    if norm0 == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    if rho <= 0.0 {
        return Err(Error::Definiteness {
            iteration: 0,
            value: rho,
        });
    }
    let mut p = z.clone();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for it in 1..=options.max_iter {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::Definiteness {
                iteration: it,
                value: pq,
            });
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        precond.apply(&r, &mut z);
        let rho_next = dot(&z, &r);
        let rel = residual_measure(options.norm, &z, &r) / norm0;
        report.residual_history.push(rel);
        report.iterations = it;
        alphas.push(alpha);
        if rel <= options.tol || rel <= EXHAUSTED {
            report.converged = rel <= options.tol;
            break;
        }
        if rho_next <= 0.0 {
            return Err(Error::Definiteness {
                iteration: it,
                value: rho_next,
            });
        }
        let beta = rho_next / rho;
        betas.push(beta);
        rho = rho_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ritz = lanczos_ritz_values(&alphas, &betas);
    if let (Some(&lo), Some(&hi)) = (ritz.first(), ritz.last()) {
        report.ritz_min = Some(lo);
        report.ritz_max = Some(hi);
        report.kappa_estimate = Some((hi / lo).max(1.0));
    }
    Ok((x, report))
}

/// How the stationary two-level iterations are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryForm {
    /// `u ← u + N⁻¹(g − A u)` with the full preconditioner.
    Combined,
    /// Level-by-level sub-steps: coarse then local on the same residual for the
    /// additive method; coarse, local, coarse on fresh residuals for the hybrid method.
    SubSteps,
}

/// Residual growth factor treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Richardson iteration preconditioned by `precond` in its own mode.
pub fn stationary_solve(
    a: &CsrMatrix,
    g: &[f64],
    precond: &SchwarzPreconditioner,
    x0: &[f64],
    form: StationaryForm,
    options: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.nrows();
    Error::check_len(n, g.len())?;
    Error::check_len(n, x0.len())?;
    let residual =
        |u: &[f64]| -> Vec<f64> { g.iter().zip(a.mul_vec(u)).map(|(g, au)| g - au).collect() };
    let add = |u: &mut [f64], d: &[f64]| u.iter_mut().zip(d).for_each(|(a, b)| *a += b);
    let mut u = x0.to_vec();
    let mut report = SolveReport::new();
    let r = residual(&u);
    let z = precond.apply_mode(&r)?;
    let norm0 = residual_measure(options.norm, &z, &r);
    if norm0 == 0.0 {
        report.converged = true;
        return Ok((u, report));
    }
    let mut r = r;
    let mut z = z;
    for it in 1..=options.max_iter {
        match (form, precond.mode()) {
            (StationaryForm::Combined, _) | (StationaryForm::SubSteps, Mode::OneLevel) => {
                add(&mut u, &z)
            }
            (StationaryForm::SubSteps, Mode::Additive) => {
                let c = precond.apply_coarse(&r)?;
                add(&mut u, &c);
                let l = precond.apply_local(&r)?;
                add(&mut u, &l);
            }
            (StationaryForm::SubSteps, Mode::Hybrid) => {
                let c = precond.apply_coarse(&r)?;
                add(&mut u, &c);
                let l = precond.apply_local(&residual(&u))?;
                add(&mut u, &l);
                let c = precond.apply_coarse(&residual(&u))?;
                add(&mut u, &c);
            }
        }
        r = residual(&u);
        z = precond.apply_mode(&r)?;
        let rel = residual_measure(options.norm, &z, &r) / norm0;
        report.residual_history.push(rel);
        report.iterations = it;
        if rel <= options.tol {
            report.converged = true;
            break;
        }
        if !rel.is_finite() || rel > DIVERGENCE_FACTOR {
            report.diverged = true;
            break;
        }
    }
    Ok((u, report))
}

/// Ritz-value estimate of `κ(N⁻¹A)` from a PCG run on a random right-hand
/// side without early stopping (at most `min(n, 200)` steps).
pub fn estimate_condition(
    a: &dyn LinearOperator,
    precond: &dyn Preconditioner,
    seed: u64,
) -> Result<SolveReport> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, report) = pcg_solve(
        a,
        &g,
        precond,
        &vec![0.0; n],
        SolveOptions::new(0.0, n.min(200)),
    )?;
    Ok(report)
}
