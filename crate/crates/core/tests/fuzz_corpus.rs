//! Replays the checked-in fuzz corpus through the parsers with the same
//! round-trip checks as the fuzz targets.

use std::path::PathBuf;

use dgschwarz::cli::{parse_csv, rows_to_csv, ExperimentConfig};
use dgschwarz::mesh::Mesh;
use dgschwarz::partition::parse_partition_dump;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn mesh_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("mesh_text") {
        if let Ok(mesh) = Mesh::from_text(&text) {
            let again = Mesh::from_text(&mesh.to_text()).unwrap();
            assert_eq!(again.vertices(), mesh.vertices(), "{name}");
            assert_eq!(again.triangles(), mesh.triangles(), "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 2);
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("config") {
        if let Ok(config) = ExperimentConfig::parse(&text) {
            let written = config.to_text();
            assert_eq!(
                ExperimentConfig::parse(&written).unwrap().to_text(),
                written,
                "{name}"
            );
            accepted += 1;
        }
    }
    assert_eq!(accepted, 3);
}

#[test]
fn partition_dump_seeds() {
    let accepted = seeds("partition_dump")
        .iter()
        .filter(|(_, t)| parse_partition_dump(t).is_ok())
        .count();
    // `not_nested` parses; nesting is checked when the partition is built
    assert_eq!(accepted, 3);
}

#[test]
fn report_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("report_csv") {
        if let Ok(rows) = parse_csv(&text) {
            let written = rows_to_csv(&rows);
            assert_eq!(
                rows_to_csv(&parse_csv(&written).unwrap()),
                written,
                "{name}"
            );
            accepted += 1;
        }
    }
    assert_eq!(accepted, 3);
}
