use dgschwarz::cli::{parse_csv, rows_to_csv, ExperimentConfig, ResultRow};
use dgschwarz::mesh::{build_uniform_square_mesh, Mesh};
use dgschwarz::schwarz::Mode;
use dgschwarz::Error;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::OneLevel),
        Just(Mode::Additive),
        Just(Mode::Hybrid)
    ]
}

fn row() -> impl Strategy<Value = ResultRow> {
    (
        (
            1usize..100_000,
            1usize..1000,
            1usize..1000,
            1usize..5000,
            1usize..7,
            mode(),
        ),
        (
            0usize..5000,
            0.0f64..1e9,
            0.0f64..1e6,
            1.0f64..1e8,
            0.0f64..1e4,
        ),
    )
        .prop_map(
            |((th, n, thi, th_h, p, precond), (iterations, mfl, mcomm, kappa, seconds))| {
                ResultRow {
                    th,
                    n_subdomains: n,
                    thi,
                    th_h,
                    p,
                    precond,
                    iterations,
                    mfl,
                    mcomm,
                    kappa,
                    seconds,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(row(), 0..8)) {
        prop_assert_eq!(parse_csv(&rows_to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn config_round_trip(
        problem in prop_oneof![Just("laplace"), Just("stripes")],
        zeta in 1.0f64..1e6,
        p in prop::collection::vec(1usize..5, 1..4),
        cw in 1.0f64..100.0,
        mesh_n in prop::collection::vec(1usize..64, 1..4),
        target in 1.0f64..500.0,
        m in 1usize..5,
        precond in prop::collection::vec(mode(), 1..3),
        respect in any::<bool>(),
        tol in prop::option::of(1e-12f64..1e-2),
        seed in any::<u64>(),
    ) {
        let c = ExperimentConfig {
            problem: problem.into(),
            zeta,
            p,
            cw,
            mesh_n,
            mesh_file: None,
            target,
            m,
            precond,
            respect_materials: respect,
            tol,
            seed,
            out: Some("results/run".into()),
        };
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn mesh_round_trip(n in 1usize..8, dx in -10.0f64..10.0, scale in 0.01f64..100.0) {
        let base = build_uniform_square_mesh(n);
        let vertices = base.vertices().iter().map(|v| [dx + scale * v[0], scale * v[1] - dx]).collect();
        let materials = (0..base.n_elements()).map(|k| (k % 3) as u32).collect();
        let mesh = Mesh::new(vertices, base.triangles().to_vec(), materials).unwrap();
        let back = Mesh::from_text(&mesh.to_text()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
        prop_assert_eq!(back.materials(), mesh.materials());
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,300}") {
        let _ = Mesh::from_text(&text);
        let _ = ExperimentConfig::parse(&text);
        let _ = parse_csv(&text);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let line_of = |e: Error| match e {
        Error::Parse { line, .. } => line,
        other => panic!("unexpected {other}"),
    };
    assert_eq!(
        line_of(ExperimentConfig::parse("p = 1\n# note\nbogus = 3\n").unwrap_err()),
        3
    );
    assert_eq!(
        line_of(ExperimentConfig::parse("p = 1,x\n").unwrap_err()),
        1
    );
    assert_eq!(
        line_of(Mesh::from_text("ndgdm 3 1\n0 0\n1 0\n0 1\n0 2 1 0\n").unwrap_err()),
        5
    );
    assert_eq!(
        line_of(Mesh::from_text("ndgdm 3 1\n0 0\n1 0\n").unwrap_err()),
        4
    );
    let csv = format!(
        "{}\n1,1,1,1,1,additive,3,1.0,1.0,1.0\n",
        dgschwarz::cli::CSV_HEADER
    );
    assert_eq!(line_of(parse_csv(&csv).unwrap_err()), 2);
}

#[test]
fn config_comments_and_blank_lines() {
    let c = ExperimentConfig::parse(
        "# header\n\nproblem = stripes  # inline\nzeta=1e4\nprecond = hybrid, one_level\n",
    )
    .unwrap();
    assert_eq!(c.problem, "stripes");
    assert_eq!(c.zeta, 1e4);
    assert_eq!(c.precond, vec![Mode::Hybrid, Mode::OneLevel]);
    assert_eq!(c.p, vec![1]);
}
