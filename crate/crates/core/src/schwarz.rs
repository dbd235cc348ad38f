//! One-level, two-level additive and hybrid Schwarz preconditioners.
//!
//! Index 0 always refers to the coarse problem and `1..=N` to the subdomain
//! problems, so `projection_check(0, v)` targets the coarse projection.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::cholesky::SparseCholesky;
use crate::coarse::CoarseSpace;
use crate::dgspace::DgSpace;
use crate::error::{Error, Result};
use crate::krylov::Preconditioner;
use crate::partition::Partition;
use crate::sparse::{dot, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    OneLevel,
    Additive,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::OneLevel, Mode::Additive, Mode::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Mode::OneLevel => "one_level",
            Mode::Additive => "additive",
            Mode::Hybrid => "hybrid",
        }
    }

    pub fn uses_coarse(self) -> bool {
        self != Mode::OneLevel
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one_level" | "one-level" | "onelevel" => Ok(Mode::OneLevel),
            "additive" => Ok(Mode::Additive),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(Error::Config(format!("unknown preconditioner `{other}`"))),
        }
    }
}

/// Principal submatrix `R_i A R_iᵀ`.
pub fn extract_block(a: &CsrMatrix, indices: &[usize]) -> Result<CsrMatrix> {
    a.principal_submatrix(indices)
}

/// Sparse Cholesky factor of one block together with its flop counts.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    indices: Vec<usize>,
    matrix: CsrMatrix,
    factor: SparseCholesky,
    flfac: u64,
    flass: u64,
}

impl BlockFactorization {
    pub fn factorize(block: CsrMatrix, indices: Vec<usize>) -> Result<Self> {
        Error::check_len(block.nrows(), indices.len())?;
        let factor = SparseCholesky::factorize(&block)?;
        Ok(Self {
            flfac: factor.factorization_flops(),
            flass: factor.solve_flops(),
            indices,
            matrix: block,
            factor,
        })
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn factor(&self) -> &SparseCholesky {
        &self.factor
    }

    /// Factorization flops: Σ over columns of nnz(L_col)².
    pub fn flfac(&self) -> u64 {
        self.flfac
    }

    /// Flops of one forward plus backward solve: 4·nnz(L).
    pub fn flass(&self) -> u64 {
        self.flass
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }
}

/// Inner solver used for the subdomain problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSolver {
    Direct,
    /// A fixed number of unpreconditioned CG steps from zero. Diagnostic only.
    TruncatedCg(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub ff_fac: u64,
    pub ff_ass: u64,
    pub fl: f64,
    pub comm: f64,
}

/// `iter · n · log₂ N`.
pub fn communication_ops(iterations: usize, n_dofs: usize, n_subdomains: usize) -> f64 {
    if n_subdomains <= 1 {
        return 0.0;
    }
    iterations as f64 * n_dofs as f64 * (n_subdomains as f64).log2()
}

/// Per-application assembly flops of one mode given the largest local
/// solve cost and the coarse solve cost.
pub fn assembly_flops(mode: Mode, local_max: u64, coarse: u64) -> u64 {
    match mode {
        Mode::OneLevel => local_max,
        Mode::Additive => local_max.max(coarse),
        Mode::Hybrid => local_max + 2 * coarse,
    }
}

struct CoarseLevel {
    injection: CsrMatrix,
    restriction: CsrMatrix,
    block: BlockFactorization,
}

pub struct SchwarzPreconditioner {
    mode: Mode,
    system: Arc<CsrMatrix>,
    locals: Vec<BlockFactorization>,
    coarse: Option<CoarseLevel>,
    local_solver: LocalSolver,
    applications: AtomicU64,
    assembly_flops: AtomicU64,
}

impl fmt::Debug for SchwarzPreconditioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchwarzPreconditioner")
            .field("mode", &self.mode)
            .field("n_dofs", &self.system.nrows())
            .field("subdomains", &self.locals.len())
            .field("n0", &self.coarse_size())
            .finish()
    }
}

/// Dof index sets of every subdomain, each sorted.
pub fn subdomain_index_sets(space: &DgSpace, partition: &Partition) -> Result<Vec<Vec<usize>>> {
    Error::check_len(space.n_elements(), partition.subdomain_of().len())?;
    let mut sets = vec![Vec::new(); partition.n_subdomains()];
    for (k, &s) in partition.subdomain_of().iter().enumerate() {
        sets[s].extend(space.dofs(k));
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    Ok(sets)
}

impl SchwarzPreconditioner {
    /// Factorizes all subdomain blocks and, unless `mode` is one-level, the coarse matrix.
    pub fn new(
        mode: Mode,
        system: Arc<CsrMatrix>,
        index_sets: Vec<Vec<usize>>,
        coarse: Option<&CoarseSpace>,
    ) -> Result<Self> {
        let n = system.nrows();
        let mut seen = vec![false; n];
        for set in &index_sets {
            for &i in set {
                if i >= n || seen[i] {
                    return Err(Error::Data(format!(
                        "dof {i} is out of range or in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!("dof {i} belongs to no block")));
        }
        let locals = index_sets
            .into_par_iter()
            .map(|idx| BlockFactorization::factorize(extract_block(&system, &idx)?, idx))
            .collect::<Result<Vec<_>>>()?;
        let coarse = match (mode.uses_coarse(), coarse) {
            (false, _) => None,
            (true, None) => {
                return Err(Error::Config(format!(
                    "{mode} preconditioner needs a coarse space"
                )))
            }
            (true, Some(cs)) => {
                Error::check_len(n, cs.injection().nrows())?;
                let block =
                    BlockFactorization::factorize(cs.matrix().clone(), (0..cs.n0()).collect())?;
                Some(CoarseLevel {
                    injection: cs.injection().clone(),
                    restriction: cs.restriction().clone(),
                    block,
                })
            }
        };
        Ok(Self {
            mode,
            system,
            locals,
            coarse,
            local_solver: LocalSolver::Direct,
            applications: AtomicU64::new(0),
            assembly_flops: AtomicU64::new(0),
        })
    }

    /// Blocks from the subdomains of `partition`.
    pub fn from_partition(
        mode: Mode,
        system: Arc<CsrMatrix>,
        space: &DgSpace,
        partition: &Partition,
        coarse: Option<&CoarseSpace>,
    ) -> Result<Self> {
        Self::new(
            mode,
            system,
            subdomain_index_sets(space, partition)?,
            coarse,
        )
    }

    /// Replaces the direct subdomain solves (diagnostics only).
    pub fn with_local_solver(mut self, solver: LocalSolver) -> Self {
        self.local_solver = solver;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn system(&self) -> &CsrMatrix {
        &self.system
    }

    pub fn n_dofs(&self) -> usize {
        self.system.nrows()
    }

    pub fn n_subdomains(&self) -> usize {
        self.locals.len()
    }

    pub fn local_blocks(&self) -> &[BlockFactorization] {
        &self.locals
    }

    pub fn coarse_block(&self) -> Option<&BlockFactorization> {
        self.coarse.as_ref().map(|c| &c.block)
    }

    pub fn coarse_size(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.block.size())
    }

    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    /// Assembly flops accumulated over all applications so far.
    pub fn accumulated_assembly_flops(&self) -> u64 {
        self.assembly_flops.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.applications.store(0, Ordering::Relaxed);
        self.assembly_flops.store(0, Ordering::Relaxed);
    }

    fn record(&self) {
        self.applications.fetch_add(1, Ordering::Relaxed);
        self.assembly_flops
            .fetch_add(self.ff_ass(), Ordering::Relaxed);
    }

    fn local_solve(&self, block: &BlockFactorization, b: &[f64]) -> Vec<f64> {
        match self.local_solver {
            LocalSolver::Direct => block.solve(b),
            LocalSolver::TruncatedCg(steps) => truncated_cg(block.matrix(), b, steps),
        }
    }

    /// `Σ_{i≥1} R_iᵀ A_i⁻¹ R_i x`.
    pub fn apply_local(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_dofs(), x.len())?;
        let mut u = vec![0.0; x.len()];
        self.local_into(x, &mut u);
        Ok(u)
    }

    fn local_into(&self, x: &[f64], u: &mut [f64]) {
        let parts: Vec<Vec<f64>> = self
            .locals
            .par_iter()
            .map(|b| {
                let rhs: Vec<f64> = b.indices.iter().map(|&i| x[i]).collect();
                self.local_solve(b, &rhs)
            })
            .collect();
        for (b, sol) in self.locals.iter().zip(parts) {
            for (&i, v) in b.indices.iter().zip(sol) {
                u[i] = v;
            }
        }
    }

    /// `R₀ᵀ A₀⁻¹ R₀ x`.
    pub fn apply_coarse(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_dofs(), x.len())?;
        let c = self.coarse.as_ref().ok_or_else(|| {
            Error::Unsupported("one-level preconditioner has no coarse level".into())
        })?;
        Ok(c.injection
            .mul_vec(&c.block.solve(&c.restriction.mul_vec(x))))
    }

    /// Local solves plus, for the two-level variant, the coarse solve, all independent.
    pub fn apply_additive(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_dofs(), x.len())?;
        if self.mode == Mode::Hybrid {
            return Err(Error::Unsupported(
                "additive application of a hybrid preconditioner".into(),
            ));
        }
        let (mut u, coarse) = rayon::join(
            || self.apply_local(x).expect("length checked"),
            || {
                self.coarse
                    .as_ref()
                    .map(|_| self.apply_coarse(x).expect("length checked"))
            },
        );
        if let Some(c) = coarse {
            u.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        }
        self.record();
        Ok(u)
    }

    /// Coarse solve, local solves on the updated residual, second coarse solve.
    pub fn apply_hybrid(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_dofs(), x.len())?;
        if self.mode != Mode::Hybrid {
            return Err(Error::Unsupported(format!(
                "hybrid application of a {} preconditioner",
                self.mode
            )));
        }
        let a = &*self.system;
        let z0 = self.apply_coarse(x)?;
        let az0 = a.mul_vec(&z0);
        let z: Vec<f64> = x.iter().zip(&az0).map(|(x, y)| x - y).collect();
        let y = self.apply_local(&z)?;
        let v = self.apply_coarse(&a.mul_vec(&y))?;
        self.record();
        Ok(z0
            .iter()
            .zip(&y)
            .zip(&v)
            .map(|((z, y), v)| z + y - v)
            .collect())
    }

    /// Dispatches on the mode.
    pub fn apply_mode(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            Mode::Hybrid => self.apply_hybrid(x),
            _ => self.apply_additive(x),
        }
    }

    /// `P_i v = R_iᵀ A_i⁻¹ R_i A v` (`i = 0` is the coarse level).
    pub fn projection(&self, i: usize, v: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_dofs(), v.len())?;
        let av = self.system.mul_vec(v);
        if i == 0 {
            return self.apply_coarse(&av);
        }
        let b = self.locals.get(i - 1).ok_or(Error::Dimension {
            expected: self.locals.len(),
            found: i,
        })?;
        let rhs: Vec<f64> = b.indices.iter().map(|&j| av[j]).collect();
        let mut out = vec![0.0; v.len()];
        for (&j, x) in b.indices.iter().zip(self.local_solve(b, &rhs)) {
            out[j] = x;
        }
        Ok(out)
    }

    /// `‖P_i(P_i v) − P_i v‖_A / ‖P_i v‖_A`, or 0 when `P_i v = 0`.
    pub fn projection_check(&self, i: usize, v: &[f64]) -> Result<f64> {
        let pv = self.projection(i, v)?;
        let nrm = dot(&pv, &self.system.mul_vec(&pv)).max(0.0).sqrt();
        if nrm == 0.0 {
            return Ok(0.0);
        }
        let ppv = self.projection(i, &pv)?;
        let diff: Vec<f64> = ppv.iter().zip(&pv).map(|(a, b)| a - b).collect();
        Ok(dot(&diff, &self.system.mul_vec(&diff)).max(0.0).sqrt() / nrm)
    }

    /// `|⟨N⁻¹x, y⟩ − ⟨x, N⁻¹y⟩| / (⟨N⁻¹x, x⟩⟨N⁻¹y, y⟩)^{1/2}` for the configured mode.
    pub fn symmetry_defect(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let nx = self.apply_mode(x)?;
        let ny = self.apply_mode(y)?;
        let scale = (dot(&nx, x) * dot(&ny, y)).abs().sqrt();
        Ok((dot(&nx, y) - dot(x, &ny)).abs() / scale)
    }

    /// `max_{i=0..N} flfac(n_i)`.
    pub fn ff_fac(&self) -> u64 {
        self.locals
            .iter()
            .chain(self.coarse_block())
            .map(BlockFactorization::flfac)
            .max()
            .unwrap_or(0)
    }

    /// Assembly flops of one application.
    pub fn ff_ass(&self) -> u64 {
        let local = self
            .locals
            .iter()
            .map(BlockFactorization::flass)
            .max()
            .unwrap_or(0);
        let coarse = self.coarse_block().map_or(0, BlockFactorization::flass);
        assembly_flops(self.mode, local, coarse)
    }

    /// Flop and communication cost of `iterations` preconditioned iterations.
    pub fn cost_report(&self, iterations: usize) -> CostReport {
        let ff_fac = self.ff_fac();
        let ff_ass = self.ff_ass();
        CostReport {
            ff_fac,
            ff_ass,
            fl: ff_fac as f64 + iterations as f64 * ff_ass as f64,
            comm: communication_ops(iterations, self.n_dofs(), self.n_subdomains()),
        }
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let u = self
            .apply_mode(r)
            .expect("preconditioner applied to a vector of the wrong length");
        z.copy_from_slice(&u);
    }
}

fn truncated_cg(a: &CsrMatrix, b: &[f64], steps: usize) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..steps {
        if rr == 0.0 {
            break;
        }
        let q = a.mul_vec(&p);
        let alpha = rr / dot(&p, &q);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}
