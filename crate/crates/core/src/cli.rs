//! Experiment configuration, driver and report emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::coarse::{CoarseOptions, CoarseSpace};
use crate::dgspace::DgSpace;
use crate::error::{Error, Result};
use crate::krylov::{default_max_iter, pcg_solve, SolveOptions, SolveReport};
use crate::mesh::{build_uniform_square_mesh, Mesh};
use crate::partition::Partition;
use crate::schwarz::{Mode, SchwarzPreconditioner};
use crate::sipg::{
    assemble_system, build_benchmark_problem, oscillatory_initial_guess, BenchmarkProblem,
    DEFAULT_PENALTY,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub zeta: f64,
    pub p: Vec<usize>,
    pub cw: f64,
    pub mesh_n: Vec<usize>,
    /// Replaces `mesh_n` when set.
    pub mesh_file: Option<PathBuf>,
    /// Target `#T_h / N`.
    pub target: f64,
    pub m: usize,
    pub precond: Vec<Mode>,
    pub respect_materials: bool,
    /// Defaults to the problem's tolerance.
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "laplace".into(),
            zeta: 1.0,
            p: vec![1],
            cw: DEFAULT_PENALTY,
            mesh_n: vec![24],
            mesh_file: None,
            target: 100.0,
            m: 1,
            precond: vec![Mode::Additive, Mode::Hybrid],
            respect_materials: false,
            tol: None,
            seed: 0,
            out: None,
        }
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::parse(line, format!("invalid entry `{s}` for `{key}`")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid value `{value}` for `{key}`")))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            c.set(line, key.trim(), value.trim())?;
        }
        Ok(c)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = value.to_string(),
            "zeta" => self.zeta = parse_one(line, key, value)?,
            "p" => self.p = parse_list(line, key, value)?,
            "cw" => self.cw = parse_one(line, key, value)?,
            "mesh_n" => self.mesh_n = parse_list(line, key, value)?,
            "mesh_file" => self.mesh_file = (!value.is_empty()).then(|| PathBuf::from(value)),
            "target" => self.target = parse_one(line, key, value)?,
            "m" => self.m = parse_one(line, key, value)?,
            "precond" => {
                self.precond = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<Mode>().map_err(|_| {
                            Error::parse(line, format!("unknown preconditioner `{s}`"))
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "respect_materials" => self.respect_materials = parse_one(line, key, value)?,
            "tol" => {
                self.tol = if value.is_empty() {
                    None
                } else {
                    Some(parse_one(line, key, value)?)
                }
            }
            "seed" => self.seed = parse_one(line, key, value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "zeta = {:?}", self.zeta);
        let _ = writeln!(s, "p = {}", join(&self.p));
        let _ = writeln!(s, "cw = {:?}", self.cw);
        let _ = writeln!(s, "mesh_n = {}", join(&self.mesh_n));
        let _ = writeln!(s, "mesh_file = {}", path(&self.mesh_file));
        let _ = writeln!(s, "target = {:?}", self.target);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "precond = {}", join(&self.precond));
        let _ = writeln!(s, "respect_materials = {}", self.respect_materials);
        let _ = writeln!(
            s,
            "tol = {}",
            self.tol.map(|t| format!("{t:?}")).unwrap_or_default()
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", path(&self.out));
        s
    }

    pub fn benchmark(&self) -> Result<BenchmarkProblem> {
        build_benchmark_problem(&self.problem, self.zeta)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.benchmark()?;
        if self.precond.is_empty() {
            return bad("preconditioner set is empty".into());
        }
        if self.p.is_empty() {
            return bad("polynomial degree list is empty".into());
        }
        if let Some(&p) = self
            .p
            .iter()
            .find(|&&p| p == 0 || p > crate::dgspace::MAX_DEGREE)
        {
            return bad(format!(
                "polynomial degree {p} outside 1..={}",
                crate::dgspace::MAX_DEGREE
            ));
        }
        if self.mesh_file.is_none() && (self.mesh_n.is_empty() || self.mesh_n.contains(&0)) {
            return bad("mesh_n must list positive sizes".into());
        }
        if !(self.cw > 0.0 && self.cw.is_finite()) {
            return bad(format!(
                "penalty constant must be positive, got {}",
                self.cw
            ));
        }
        if !(self.target >= 1.0 && self.target.is_finite()) {
            return bad(format!(
                "target elements per subdomain must be >= 1, got {}",
                self.target
            ));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("tolerance must lie in (0, 1), got {t}"));
            }
        }
        Ok(())
    }

    fn meshes(&self, problem: &BenchmarkProblem) -> Result<Vec<Mesh>> {
        let meshes = match &self.mesh_file {
            Some(path) => vec![Mesh::load(path)?],
            None => self
                .mesh_n
                .iter()
                .map(|&n| build_uniform_square_mesh(n))
                .collect(),
        };
        Ok(meshes
            .into_iter()
            .map(|m| problem.assign_materials(m))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub th: usize,
    pub n_subdomains: usize,
    pub thi: usize,
    pub th_h: usize,
    pub p: usize,
    pub precond: Mode,
    pub iterations: usize,
    pub mfl: f64,
    pub mcomm: f64,
    pub kappa: f64,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "Th,N,Thi,ThH,p,precond,iter,MFl,Mcomm,kappa,seconds";

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:?},{:?},{:?},{:?}",
            self.th,
            self.n_subdomains,
            self.thi,
            self.th_h,
            self.p,
            self.precond,
            self.iterations,
            self.mfl,
            self.mcomm,
            self.kappa,
            self.seconds
        )
    }
}

/// Subdomain count for a target `#T_h / N` ratio.
pub fn subdomain_count(n_elements: usize, target: f64) -> usize {
    ((n_elements as f64 / target).round() as usize).clamp(1, n_elements)
}

/// One solved configuration.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub row: ResultRow,
    pub report: SolveReport,
    /// Largest agglomerate bounding-box aspect ratio.
    pub max_aspect_ratio: f64,
}

/// Runs every mesh × degree × preconditioner combination.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<Vec<ExperimentRun>> {
    config.validate()?;
    let problem = config.benchmark()?;
    let tol = config.tol.unwrap_or(problem.default_tolerance());
    let mut runs = Vec::new();
    for mesh in config.meshes(&problem)? {
        let th = mesh.n_elements();
        let n_sub = subdomain_count(th, config.target);
        let partition = Partition::build(
            &mesh,
            n_sub,
            config.m,
            config.respect_materials,
            config.seed,
        )?;
        let max_aspect_ratio = partition
            .agglomerate_aspect_ratios(&mesh)
            .into_iter()
            .fold(1.0, f64::max);
        let diffusion = problem.diffusion(&mesh)?;
        let assembly = problem.config(config.cw);
        for &p in &config.p {
            let context = |e: Error| Error::Context {
                context: format!("#T_h={th}, N={n_sub}, p={p}"),
                source: Box::new(e),
            };
            let space =
                DgSpace::uniform(&mesh, p, Some(partition.subdomain_of())).map_err(context)?;
            let system = assemble_system(&mesh, &space, &diffusion, &assembly).map_err(context)?;
            let a = Arc::new(system.matrix);
            let coarse = if config.precond.iter().any(|m| m.uses_coarse()) {
                Some(
                    CoarseSpace::build(&mesh, &space, &partition, &a, CoarseOptions::default())
                        .map_err(context)?,
                )
            } else {
                None
            };
            let x0 = oscillatory_initial_guess(&mesh, &space);
            for &mode in &config.precond {
                let start = Instant::now();
                let pre = SchwarzPreconditioner::from_partition(
                    mode,
                    a.clone(),
                    &space,
                    &partition,
                    coarse.as_ref(),
                )
                .map_err(context)?;
                let options = SolveOptions::new(tol, default_max_iter(space.n_dofs()));
                let (_, mut report) =
                    pcg_solve(&*a, &system.rhs, &pre, &x0, options).map_err(context)?;
                let cost = pre.cost_report(report.iterations);
                report.fl = Some(cost.fl);
                report.comm = Some(cost.comm);
                let row = ResultRow {
                    th,
                    n_subdomains: partition.n_subdomains(),
                    thi: (th as f64 / partition.n_subdomains() as f64).round() as usize,
                    th_h: partition.n_coarse(),
                    p,
                    precond: mode,
                    iterations: report.iterations,
                    mfl: cost.fl / 1e6,
                    mcomm: cost.comm / 1e6,
                    kappa: report.kappa_estimate.unwrap_or(1.0),
                    seconds: start.elapsed().as_secs_f64(),
                };
                runs.push(ExperimentRun {
                    row,
                    report,
                    max_aspect_ratio,
                });
            }
        }
    }
    Ok(runs)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_detailed(config)?
        .into_iter()
        .map(|r| r.row)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 11 {
            return Err(Error::parse(
                line_no,
                format!("expected 11 fields, found {}", f.len()),
            ));
        }
        rows.push(ResultRow {
            th: parse_one(line_no, "Th", f[0])?,
            n_subdomains: parse_one(line_no, "N", f[1])?,
            thi: parse_one(line_no, "Thi", f[2])?,
            th_h: parse_one(line_no, "ThH", f[3])?,
            p: parse_one(line_no, "p", f[4])?,
            precond: f[5]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("unknown preconditioner `{}`", f[5])))?,
            iterations: parse_one(line_no, "iter", f[6])?,
            mfl: parse_one(line_no, "MFl", f[7])?,
            mcomm: parse_one(line_no, "Mcomm", f[8])?,
            kappa: parse_one(line_no, "kappa", f[9])?,
            seconds: parse_one(line_no, "seconds", f[10])?,
        });
    }
    Ok(rows)
}

/// One table per preconditioner, with a column group per degree.
pub fn rows_to_markdown(rows: &[ResultRow]) -> String {
    let mut modes: Vec<Mode> = rows.iter().map(|r| r.precond).collect();
    modes.sort();
    modes.dedup();
    let mut degrees: Vec<usize> = rows.iter().map(|r| r.p).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut s = String::new();
    for mode in modes {
        let _ = writeln!(s, "### {mode}\n");
        let mut header = String::from("| #Th | N | #Thi | #ThH |");
        let mut rule = String::from("|---|---|---|---|");
        for p in &degrees {
            let _ = write!(header, " p={p} iter | MFl | Mcomm | kappa |");
            rule.push_str("---|---|---|---|");
        }
        let _ = writeln!(s, "{header}\n{rule}");
        let mut keys: Vec<(usize, usize, usize, usize)> = rows
            .iter()
            .filter(|r| r.precond == mode)
            .map(|r| (r.th, r.n_subdomains, r.thi, r.th_h))
            .collect();
        keys.dedup();
        for key in keys {
            let _ = write!(s, "| {} | {} | {} | {} |", key.0, key.1, key.2, key.3);
            for &p in &degrees {
                match rows.iter().find(|r| {
                    r.precond == mode && r.p == p && (r.th, r.n_subdomains, r.thi, r.th_h) == key
                }) {
                    Some(r) => {
                        let _ = write!(
                            s,
                            " {} | {:.1} | {:.1} | {:.1} |",
                            r.iterations, r.mfl, r.mcomm, r.kappa
                        );
                    }
                    None => s.push_str(" - | - | - | - |"),
                }
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}

pub fn emit_report(rows: &[ResultRow], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Data("no result rows to write".into()));
    }
    let text = match format {
        ReportFormat::Csv => rows_to_csv(rows),
        ReportFormat::Markdown => rows_to_markdown(rows),
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// File name for a residual history.
pub fn history_file_name(row: &ResultRow) -> String {
    format!("history_Th{}_p{}_{}.csv", row.th, row.p, row.precond)
}
