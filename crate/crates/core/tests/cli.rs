use std::fs;
use std::path::Path;
use std::process::Command;

use sectorsim::runner::{emit_outputs, run_experiment, summarize};
use sectorsim::Scenario;

fn sectorsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sectorsim"))
        .args(args)
        .output()
        .unwrap()
}

fn run_into(dir: &Path, extra: &[&str]) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["--drops", "3", "--out", out];
    args.extend_from_slice(extra);
    let o = sectorsim(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn writes_rates_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    run_into(
        dir.path(),
        &[
            "--setting",
            "compsec",
            "--precoder",
            "zf",
            "--power",
            "dpa-pmf",
            "--reuse",
            "3",
            "--seed",
            "9",
            "--dump-layout",
        ],
    );
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let mut lines = rates.lines();
    assert_eq!(
        lines.next(),
        Some("drop,cell,user,sinr,P,I1,I2,I3,rate_bps")
    );
    assert_eq!(lines.count(), 3 * 19 * 18);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["scenario"]["setting"], "compsec");
    assert_eq!(summary["scenario"]["pilot_reuse"], 3);
    assert!(summary["stats"]["p95_likely"].as_f64().unwrap() > 0.0);
    assert!(summary["runtime_s"].is_number());
    assert!(dir.path().join("layout.csv").exists());
}

#[test]
fn thread_count_does_not_change_rates() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    run_into(one.path(), &["--threads", "1", "--setting", "secmp"]);
    run_into(many.path(), &["--threads", "4", "--setting", "secmp"]);
    assert_eq!(
        fs::read(one.path().join("rates.csv")).unwrap(),
        fs::read(many.path().join("rates.csv")).unwrap()
    );
}

#[test]
fn config_file_and_pattern_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "num_cells = 7\nusers_per_cell = 4\nsetting = \"secmd\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run_into(
        &out,
        &["--config", cfg.to_str().unwrap(), "--pattern", "irp:120:2"],
    );
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 3 * 7 * 4);
}

#[test]
fn bad_input_fails_with_diagnostic() {
    let o = sectorsim(&["--setting", "bogus"]);
    assert!(!o.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "pilot_reuse = 2\n").unwrap();
    let o = sectorsim(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn library_outputs_match_summary() {
    let s = Scenario {
        num_cells: 7,
        num_drops: 2,
        ..Scenario::default()
    };
    let r = run_experiment(&s).unwrap();
    let stats = summarize(&r).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&r, &stats, dir.path()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let p95 = summary["stats"]["p95_likely"].as_f64().unwrap();
    assert!((p95 / stats.p95_likely - 1.0).abs() < 1e-15);
    assert_eq!(summary["stats"]["samples"], 7 * 18 * 2);
}
