use std::path::Path;
use std::process::{Command, Output};

use spectral_partition::grid::{build_domain, ShapeSpec};
use spectral_partition::io::{partition_from_pgm, partition_to_pgm};
use spectral_partition::partition::{optimize_partition, OptimizerOptions};
use spectral_partition_cli::sweep::{SWEEP_COLUMNS, SWEEP_HEADER};

fn specpart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specpart")).current_dir(dir).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("run.toml"), text).unwrap();
}

#[test]
fn empty_m_list_writes_an_empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "resolution = 48\nm = []\n");
    let out = specpart(dir.path(), &["--config", "run.toml", "--out", "o", "sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv, format!("{SWEEP_HEADER}\n{SWEEP_COLUMNS}\n"));
    assert!(dir.path().join("o/convergence.svg").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "resolution = 96\nm = [2]\n");
    let out = specpart(dir.path(), &["--config", "run.toml", "--out", "o", "glue-verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[strip]"));

    assert_eq!(specpart(dir.path(), &["--config", "run.toml", "tile"]).status.code(), Some(1));
    assert_eq!(specpart(dir.path(), &["bounds", "--resolution", "64"]).status.code(), Some(1));
    assert_eq!(specpart(dir.path(), &["--config", "missing.toml", "eigen"]).status.code(), Some(1));
    assert_eq!(specpart(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(specpart(dir.path(), &["--help"]).status.code(), Some(0));

    write_config(dir.path(), "resolution = 96\nm = [1]\ncolour = 3\n");
    assert_eq!(specpart(dir.path(), &["--config", "run.toml", "eigen"]).status.code(), Some(1));
}

#[test]
fn loaded_partition_round_trips_before_verification() {
    let d = build_domain(&ShapeSpec::UnitSquare, 96).unwrap();
    let opts = OptimizerOptions { restarts: 2, ..OptimizerOptions::default() };
    let (p, _) = optimize_partition(&d, 4, 3, &opts).unwrap();
    let text = partition_to_pgm(&p).unwrap();
    assert_eq!(partition_from_pgm(&d, &text).unwrap(), p);

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.pgm"), &text).unwrap();
    write_config(
        dir.path(),
        "resolution = 96\npartition_file = \"p.pgm\"\n[[domain]]\nid = \"sq\"\nshape = \"unit_square\"\n[strip]\n",
    );
    let out = specpart(dir.path(), &["--config", "run.toml", "--out", "o", "glue-verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("o/chain_report.txt")).unwrap();
    assert!(report.starts_with("domain_id: sq\n"));
    assert!(report.contains("chain_holds: true"), "{report}");
    let parts = std::fs::read_to_string(dir.path().join("o/chain_parts.csv")).unwrap();
    assert_eq!(parts.lines().count(), 1 + 4);
    assert!(parts.lines().skip(1).all(|l| l.starts_with("sq,4,")));
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "resolution = 48\nm = [1, 3, 4]\n[optimizer]\nrestarts = 2\n");
    let a = specpart(dir.path(), &["--config", "run.toml", "--out", "a", "--jobs", "3", "sweep"]);
    let b = specpart(dir.path(), &["--config", "run.toml", "--out", "b", "--jobs", "1", "sweep"]);
    assert!(a.status.success() && b.status.success());
    for f in ["sweep.csv", "convergence.svg", "square/partition_m4.pgm", "disk/partition_m3.pgm"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 6);
}

#[test]
fn eigen_partition_and_tile_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "resolution = 64\nm = [2]\n[[domain]]\nid = \"sq\"\nshape = \"unit_square\"\n[tile]\nkind = \"square_copies\"\nk = 2\n",
    );
    for cmd in ["eigen", "partition", "tile"] {
        let out = specpart(dir.path(), &["--config", "run.toml", "--out", "o", "--seed", "5", cmd]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let eig = std::fs::read_to_string(dir.path().join("o/eigen.csv")).unwrap();
    let row: Vec<&str> = eig.lines().nth(2).unwrap().split(',').collect();
    let lambda: f64 = row[4].parse().unwrap();
    assert!((lambda / (2.0 * std::f64::consts::PI.powi(2)) - 1.0).abs() < 0.01);
    let parts = std::fs::read_to_string(dir.path().join("o/partitions.csv")).unwrap();
    assert!(parts.lines().nth(2).unwrap().starts_with("sq,2,"));
    let tile = std::fs::read_to_string(dir.path().join("o/tile.csv")).unwrap();
    let row: Vec<&str> = tile.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["sq", "square_copies", "4"]);
    assert!(dir.path().join("o/sq/tile.pgm").exists() && dir.path().join("o/sq/eigenfunction.pgm").exists());
}
