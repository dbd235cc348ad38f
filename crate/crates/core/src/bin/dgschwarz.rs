use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dgschwarz::cli::{
    emit_report, history_file_name, run_experiment_detailed, ExperimentConfig, ReportFormat,
};
use dgschwarz::Error;

/// Run SIPG + Schwarz preconditioned CG experiments and write result tables.
#[derive(Debug, Parser)]
#[command(name = "dgschwarz", version)]
struct Args {
    /// key = value configuration file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// laplace or stripes
    #[arg(long)]
    problem: Option<String>,
    /// comma-separated polynomial degrees
    #[arg(long)]
    p: Option<String>,
    /// interior penalty constant C_W
    #[arg(long)]
    cw: Option<String>,
    /// diffusion contrast of the stripes problem
    #[arg(long)]
    zeta: Option<String>,
    /// comma-separated mesh sizes n (2n² triangles on the unit square)
    #[arg(long = "mesh-n")]
    mesh_n: Option<String>,
    /// load the mesh from a file instead of generating it
    #[arg(long = "mesh-file")]
    mesh_file: Option<String>,
    /// target number of elements per subdomain
    #[arg(long)]
    target: Option<String>,
    /// agglomerates per subdomain
    #[arg(long)]
    m: Option<String>,
    /// comma-separated subset of one_level, additive, hybrid
    #[arg(long)]
    precond: Option<String>,
    /// keep each subdomain inside one material
    #[arg(long = "respect-materials", num_args = 0..=1, default_missing_value = "true")]
    respect_materials: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<String>,
}

enum Failure {
    Invalid(Error),
    Solver(Error),
    NotConverged,
}

fn config(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut c = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("problem", &args.problem),
        ("p", &args.p),
        ("cw", &args.cw),
        ("zeta", &args.zeta),
        ("mesh_n", &args.mesh_n),
        ("mesh_file", &args.mesh_file),
        ("target", &args.target),
        ("m", &args.m),
        ("precond", &args.precond),
        ("respect_materials", &args.respect_materials),
        ("tol", &args.tol),
        ("seed", &args.seed),
        ("out", &args.out),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            c.set(0, key, v)?;
        }
    }
    c.validate()?;
    Ok(c)
}

fn run(args: &Args) -> Result<(), Failure> {
    let c = config(args).map_err(Failure::Invalid)?;
    let runs = run_experiment_detailed(&c).map_err(|e| match e.root() {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Partition(_)
        | Error::Agglomeration(_)
        | Error::Topology(_)
        | Error::Io(_) => Failure::Invalid(e),
        _ => Failure::Solver(e),
    })?;
    let rows: Vec<_> = runs.iter().map(|r| r.row.clone()).collect();
    for r in &runs {
        let row = &r.row;
        let flag = if r.report.converged {
            ""
        } else {
            "  (not converged)"
        };
        let cross = r
            .report
            .crossing(1e-6)
            .map_or("-".to_string(), |i| i.to_string());
        println!(
            "Th={:<6} N={:<4} ThH={:<5} p={} {:<9} iter={:<5} MFl={:<10.2} Mcomm={:<8.2} kappa={:<9.2} iter@1e-6={:<5} aspect={:.2}{flag}",
            row.th, row.n_subdomains, row.th_h, row.p, row.precond, row.iterations, row.mfl, row.mcomm, row.kappa,
            cross, r.max_aspect_ratio
        );
    }
    if let Some(dir) = &c.out {
        let io = |e: Error| Failure::Solver(e);
        std::fs::create_dir_all(dir).map_err(|e| io(e.into()))?;
        emit_report(&rows, ReportFormat::Csv, dir.join("results.csv")).map_err(io)?;
        emit_report(&rows, ReportFormat::Markdown, dir.join("results.md")).map_err(io)?;
        for r in &runs {
            r.report
                .write_history(dir.join(history_file_name(&r.row)))
                .map_err(io)?;
        }
        std::fs::write(dir.join("config.txt"), c.to_text()).map_err(|e| io(e.into()))?;
    }
    if runs.iter().all(|r| r.report.converged) {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: at least one solve did not reach the tolerance");
            ExitCode::from(2)
        }
    }
}
