use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dgschwarz::coarse::{CoarseOptions, CoarseSpace};
use dgschwarz::dgspace::DgSpace;
use dgschwarz::krylov::{
    default_max_iter, pcg_solve, stationary_solve, SolveOptions, StationaryForm,
};
use dgschwarz::mesh::build_uniform_square_mesh;
use dgschwarz::partition::Partition;
use dgschwarz::schwarz::{Mode, SchwarzPreconditioner};
use dgschwarz::sipg::{
    assemble_system, oscillatory_initial_guess, BenchmarkProblem, SparseSystem, DEFAULT_PENALTY,
};
use dgschwarz::sparse::CsrMatrix;

struct Case {
    space: DgSpace,
    partition: Partition,
    system: SparseSystem,
    a: Arc<CsrMatrix>,
    coarse: CoarseSpace,
    x0: Vec<f64>,
}

fn case(problem: BenchmarkProblem, n: usize, p: usize, parts: usize, m: usize) -> Case {
    let mesh = problem.assign_materials(build_uniform_square_mesh(n));
    let partition = Partition::build(&mesh, parts, m, false, 0).unwrap();
    let space = DgSpace::uniform(&mesh, p, Some(partition.subdomain_of())).unwrap();
    let diffusion = problem.diffusion(&mesh).unwrap();
    let system =
        assemble_system(&mesh, &space, &diffusion, &problem.config(DEFAULT_PENALTY)).unwrap();
    let a = Arc::new(system.matrix.clone());
    let coarse =
        CoarseSpace::build(&mesh, &space, &partition, &a, CoarseOptions::default()).unwrap();
    let x0 = oscillatory_initial_guess(&mesh, &space);
    Case {
        space,
        partition,
        system,
        a,
        coarse,
        x0,
    }
}

impl Case {
    fn precond(&self, mode: Mode) -> SchwarzPreconditioner {
        SchwarzPreconditioner::from_partition(
            mode,
            self.a.clone(),
            &self.space,
            &self.partition,
            Some(&self.coarse),
        )
        .unwrap()
    }

    fn pcg_iterations(&self, mode: Mode) -> usize {
        let tol = BenchmarkProblem::Laplace.default_tolerance();
        let options = SolveOptions::new(tol, default_max_iter(self.space.n_dofs()));
        let (_, report) = pcg_solve(
            &*self.a,
            &self.system.rhs,
            &self.precond(mode),
            &self.x0,
            options,
        )
        .unwrap();
        assert!(report.converged);
        report.iterations
    }
}

#[test]
fn stationary_error_follows_propagation_operator() {
    let c = case(BenchmarkProblem::Laplace, 3, 1, 3, 1);
    let n = c.space.n_dofs();
    let a = c.a.to_dense();
    let u = a
        .clone()
        .cholesky()
        .unwrap()
        .solve(&DVector::from_vec(c.system.rhs.clone()));
    for mode in Mode::ALL {
        let pre = c.precond(mode);
        let mut ninv = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            ninv.set_column(j, &DVector::from_vec(pre.apply_mode(&e).unwrap()));
        }
        let propagation = DMatrix::<f64>::identity(n, n) - &ninv * &a;
        let mut error = DVector::from_vec(c.x0.clone()) - &u;
        for steps in 1..=5 {
            error = &propagation * error;
            for form in [StationaryForm::Combined, StationaryForm::SubSteps] {
                let (x, _) = stationary_solve(
                    &c.a,
                    &c.system.rhs,
                    &pre,
                    &c.x0,
                    form,
                    SolveOptions::new(1e-300, steps),
                )
                .unwrap();
                let got = DVector::from_vec(x) - &u;
                let rel = (&got - &error).norm() / error.norm().max(1e-300);
                assert!(rel < 1e-9, "{mode} {form:?} step {steps}: {rel:e}");
            }
        }
    }
}

#[test]
fn undamped_additive_iteration_diverges() {
    let c = case(BenchmarkProblem::Laplace, 8, 1, 8, 1);
    let opts = SolveOptions::new(1e-8, 2000);
    let (_, add) = stationary_solve(
        &c.a,
        &c.system.rhs,
        &c.precond(Mode::Additive),
        &c.x0,
        StationaryForm::Combined,
        opts,
    )
    .unwrap();
    assert!(add.diverged && !add.converged);
    assert!(add.final_residual() > dgschwarz::krylov::DIVERGENCE_FACTOR);
    // the hybrid error propagation is an A-contraction
    let (_, hyb) = stationary_solve(
        &c.a,
        &c.system.rhs,
        &c.precond(Mode::Hybrid),
        &c.x0,
        StationaryForm::SubSteps,
        opts,
    )
    .unwrap();
    assert!(hyb.converged && !hyb.diverged);
}

#[test]
fn single_subdomain_is_exact() {
    let c = case(BenchmarkProblem::Laplace, 4, 2, 1, 1);
    let pre = c.precond(Mode::OneLevel);
    let (x, report) = pcg_solve(
        &*c.a,
        &c.system.rhs,
        &pre,
        &c.x0,
        SolveOptions::new(1e-10, 50),
    )
    .unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 1);
    let (y, stat) = stationary_solve(
        &c.a,
        &c.system.rhs,
        &pre,
        &c.x0,
        StationaryForm::Combined,
        SolveOptions::new(1e-10, 50),
    )
    .unwrap();
    assert_eq!(stat.iterations, 1);
    let diff = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10);
}

#[test]
fn reference_iteration_band() {
    let c = case(BenchmarkProblem::Laplace, 24, 1, 11, 1);
    let add = c.pcg_iterations(Mode::Additive);
    let hyb = c.pcg_iterations(Mode::Hybrid);
    assert!((55..=120).contains(&add), "additive {add}");
    assert!(hyb < add, "hybrid {hyb} additive {add}");
}

#[test]
fn coarse_level_helps() {
    let c = case(BenchmarkProblem::Laplace, 16, 1, 8, 1);
    let one = c.pcg_iterations(Mode::OneLevel);
    let add = c.pcg_iterations(Mode::Additive);
    assert!(add < one, "additive {add} one-level {one}");
}

#[test]
fn preconditioners_are_positive_definite() {
    let c = case(BenchmarkProblem::Stripes { zeta: 1e4 }, 6, 2, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mode in Mode::ALL {
        let pre = c.precond(mode);
        for _ in 0..100 {
            let x: Vec<f64> = (0..c.space.n_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let nx = pre.apply_mode(&x).unwrap();
            assert!(dgschwarz::sparse::dot(&nx, &x) > 0.0);
        }
    }
}
