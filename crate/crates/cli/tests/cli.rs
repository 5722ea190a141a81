//! End-to-end runs of the compiled binary: pipelines between
//! subcommands, determinism through the process boundary, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lidbounds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary must spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// The labeled image fixture shared with the core test suite.
fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/digits")
}

#[test]
fn synth_then_lid_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cloud.csv");
    let out = run(&[
        "synth",
        "--intrinsic-dim",
        "4",
        "--ambient-dim",
        "50",
        "--n",
        "2000",
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let report = dir.path().join("lid.csv");
    let out = run(&[
        "lid",
        "--format",
        "csv",
        "--dataset",
        data.to_str().unwrap(),
        "--k",
        "40",
        "--nq",
        "20",
        "--seed",
        "5",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let median: f64 = text
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("median="))
        .expect("summary line carries median=")
        .parse()
        .unwrap();
    assert!(
        (2.0..=6.5).contains(&median),
        "median {median} off for m=4 data"
    );

    let rows = std::fs::read_to_string(&report).unwrap();
    assert!(rows.starts_with("query_index,k,lid_estimate,r_max"));
    assert_eq!(rows.lines().count(), 21, "header plus one row per query");
}

#[test]
fn sweep_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let plot = dir.path().join(format!("plot-{name}"));
        let out = run(&[
            "sweep",
            "--format",
            "synth",
            "--intrinsic-dim",
            "3",
            "--ambient-dim",
            "16",
            "--n",
            "400",
            "--k",
            "20",
            "--nq",
            "5",
            "--delta-grid",
            "0.5,1.5",
            "--eta-grid",
            "12",
            "--seed",
            "9",
            "--random-directions",
            "--out",
            path.to_str().unwrap(),
            "--plot-out",
            plot.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        outputs.push((std::fs::read(&path).unwrap(), std::fs::read(&plot).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "sweep CSVs differ between runs");
    assert_eq!(outputs[0].1, outputs[1].1, "plot CSVs differ between runs");

    let stats = run(&["stats", "--in", dir.path().join("a.csv").to_str().unwrap()]);
    assert!(stats.status.success(), "{stats:?}");
    let text = stdout(&stats);
    assert!(text.contains("rows: 10"), "{text}");
    assert!(text.contains("directions:"), "{text}");
}

#[test]
fn attack_directions_feed_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixture_dir();
    let fixture = fixture.to_str().unwrap();
    let directions = dir.path().join("directions.csv");
    let out = run(&[
        "attack",
        "--format",
        "mnist",
        "--dataset",
        fixture,
        "--n",
        "300",
        "--epochs",
        "10",
        "--lr",
        "0.5",
        "--nq",
        "10",
        "--seed",
        "3",
        "--out",
        directions.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        std::fs::read_to_string(&directions)
            .unwrap()
            .lines()
            .count(),
        10
    );

    // Same n/nq/seed, so the sweep visits the same queries the attack
    // exported directions for, in the same order.
    let sweep = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--format",
        "mnist",
        "--dataset",
        fixture,
        "--n",
        "300",
        "--k",
        "20",
        "--nq",
        "10",
        "--delta-grid",
        "0.5,1.0",
        "--eta-grid",
        "10",
        "--seed",
        "3",
        "--directions",
        directions.to_str().unwrap(),
        "--out",
        sweep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let rows = std::fs::read_to_string(&sweep).unwrap();
    assert_eq!(
        rows.lines().count(),
        21,
        "header plus 10 queries x 2 deltas"
    );
}

#[test]
fn bad_arguments_exit_with_code_2() {
    // Post-parse argument error: CSV format without a dataset path.
    let out = run(&["lid", "--format", "csv", "--k", "10"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Validation error from the sweep: k at least the sample size.
    let out = run(&[
        "sweep",
        "--format",
        "synth",
        "--n",
        "50",
        "--k",
        "100",
        "--nq",
        "5",
        "--random-directions",
        "--out",
        "/tmp/unused-sweep.csv",
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn missing_files_exit_with_code_3() {
    let out = run(&[
        "lid",
        "--format",
        "csv",
        "--dataset",
        "/nonexistent/nowhere.csv",
        "--k",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}
