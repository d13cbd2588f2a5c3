use std::process::Command;

use trajloc_harness::io::read_block;
use trajloc_harness::report::{aggregate, read_rows, ROW_HEADER};

fn trajloc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_trajloc")).args(args).output().unwrap()
}

const SMALL: &str = r#"
experiment = "small"
trials = 2
base_seed = 3
algorithms = ["tl-cbf", "tl-omp", "tl-nomp"]
snr_db = 10.0
snapshots = 20

[array]
sensors = 8

[model]
kind = "polynomial"
order = 1

[grid]
phi = [-60.0, 3.0, 60.0]
coeffs = [-4.0, 1.0, 4.0]

[[sources]]
params = [-20.0, 2.0]

[[sources]]
params = [31.0, -1.5]
"#;

#[test]
fn list_names_every_experiment() {
    let out = trajloc(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["snr", "snapshots", "grid-step", "resolution", "nonlinear", "wideband", "timing"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn oracle_prints_floor_table() {
    let out = trajloc(&["oracle"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for v in ["0.00000", "0.51277", "0.14558", "0.52897", "0.29683"] {
        assert!(text.contains(v), "{v} missing from\n{text}");
    }
}

#[test]
fn run_writes_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = trajloc(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--trials", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), ROW_HEADER.join(","));
    let rows = read_rows(&out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 2);
    let agg = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 3);
    // Aggregates recomputed from the row file match the written aggregate file.
    let recomputed = aggregate(&rows);
    for (line, a) in agg.lines().skip(1).zip(&recomputed) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], a.algorithm);
        assert_eq!(fields[5].parse::<f64>().unwrap(), trajloc_harness::report::round6(a.pd));
        assert_eq!(fields[7].parse::<f64>().unwrap(), trajloc_harness::report::round6(a.mean_ospa));
    }
}

#[test]
fn rejects_unknown_keys_and_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("snapshots = 20", "snapshots = 20\nsnapshot = 4")).unwrap();
    let out = trajloc(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    std::fs::write(&cfg, SMALL).unwrap();
    let out = trajloc(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--algorithms",
        "tl-music",
    ]);
    assert!(!out.status.success());
}

#[test]
fn synth_writes_readable_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("data");
    let out = trajloc(&["synth", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (block, seed) = read_block(&out_dir.join("block_0.csv")).unwrap();
    assert_eq!(seed, 11);
    assert_eq!((block.n_sensors(), block.snapshots()), (8, 20));
    assert!(out_dir.join("truth.json").exists());
}
