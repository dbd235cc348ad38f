use std::path::Path;
use std::process::{Command, Output};

use dgschwarz::cli::{parse_csv, ExperimentConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgschwarz"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn successful_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "--mesh-n",
        "4,6",
        "--p",
        "1,2",
        "--target",
        "12",
        "--precond",
        "one_level,additive,hybrid",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_csv(&std::fs::read_to_string(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 12);
    let md = std::fs::read_to_string(out.join("results.md")).unwrap();
    assert!(md.contains("### hybrid"));
    let config = ExperimentConfig::load(out.join("config.txt")).unwrap();
    assert_eq!(config.mesh_n, vec![4, 6]);
    let histories = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "csv")
        })
        .count();
    assert_eq!(histories, 13);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.txt");
    std::fs::write(
        &cfg,
        "problem = stripes\nzeta = 100\nmesh_n = 6\np = 3\ntarget = 20\nprecond = hybrid\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--p",
        "1",
        "--respect-materials",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = ExperimentConfig::load(out.join("config.txt")).unwrap();
    assert_eq!(
        (c.problem.as_str(), c.p.as_slice(), c.respect_materials),
        ("stripes", &[1][..], true)
    );
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["--p", "0", "--mesh-n", "2"]), 1);
    assert_eq!(code(&["--precond", "jacobi", "--mesh-n", "2"]), 1);
    assert_eq!(code(&["--problem", "helmholtz", "--mesh-n", "2"]), 1);
    assert_eq!(code(&["--mesh-n", "2", "--m", "9"]), 1);
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "p = 1\nunknown = 2\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let missing = dir.path().join("missing.mesh");
    assert_eq!(code(&["--mesh-file", missing.to_str().unwrap()]), 1);
    assert!(!Path::new(&missing).exists());
}

#[test]
fn solver_failure_exits_with_two() {
    // unattainable tolerance
    assert_eq!(
        code(&["--mesh-n", "4", "--target", "8", "--tol", "1e-30"]),
        2
    );
    // penalty far below the coercivity threshold
    assert_eq!(
        code(&["--mesh-n", "4", "--target", "8", "--p", "3", "--cw", "0.01"]),
        2
    );
}
