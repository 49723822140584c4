//! End-to-end tests of the `groupcast` binary: report emission, exit
//! codes, determinism, and the sweep path.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../groupcast/tests/fixtures")
        .join(name)
}

fn groupcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn offline_run_writes_the_expected_reports() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().join("reports");
    let result = groupcast(&[
        "--algo",
        "offline-nopref",
        "--config",
        fixture("example1.json").to_str().unwrap(),
        "--out",
        out_arg.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let csv = std::fs::read_to_string(out_arg.join("report.csv")).unwrap();
    assert_eq!(
        csv,
        "trace_id,algo,skip_pct,apbr,lsr,stall_s,objective,u1_pct,u2_pct\n\
         config,offline-nopref,10.000000,1.900000,0.300000,0,181.000000,57.894737,42.105263\n"
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_arg.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["runs"][0]["metrics"]["skip_pct"], 10.0);
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    for dir in [&a, &b] {
        let result = groupcast(&[
            "--algo",
            "online",
            "--config",
            fixture("example2.json").to_str().unwrap(),
            "--window",
            "4",
            "--alpha",
            "2",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    }
    for file in ["report.csv", "report.json"] {
        let left = std::fs::read(a.join(file)).unwrap();
        let right = std::fs::read(b.join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
}

#[test]
fn sweep_writes_one_row_per_value() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().join("sweep");
    let result = groupcast(&[
        "--algo",
        "online",
        "--config",
        fixture("example1.json").to_str().unwrap(),
        "--sweep",
        "window=2,4",
        "--out",
        out_arg.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let csv = std::fs::read_to_string(out_arg.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("param,value,runs,"));
    assert!(lines[1].starts_with("window,2,"));
    assert!(lines[2].starts_with("window,4,"));
}

#[test]
fn config_errors_exit_nonzero_with_a_diagnostic() {
    let result = groupcast(&["--algo", "online", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("/nonexistent/scenario.json"), "stderr: {stderr}");
}

#[test]
fn unknown_algorithms_are_rejected_by_argument_parsing() {
    let result = groupcast(&["--algo", "magic", "--config", "x.json"]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("magic"), "stderr: {stderr}");
}

#[test]
fn bad_sweep_values_are_rejected() {
    let result = groupcast(&[
        "--algo",
        "online",
        "--config",
        fixture("example1.json").to_str().unwrap(),
        "--sweep",
        "window=0",
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("sweep"), "stderr: {stderr}");
}

#[test]
fn log_filter_env_var_is_honoured() {
    let result = Command::new(env!("CARGO_BIN_EXE_groupcast"))
        .args([
            "--algo",
            "offline-pref",
            "--config",
            fixture("example2.json").to_str().unwrap(),
            "--out",
        ])
        .arg(tempfile::tempdir().unwrap().path().join("r"))
        .env("GROUPCAST_LOG", "info")
        .output()
        .unwrap();
    assert!(result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("INFO"), "expected info logs, got: {stderr}");
}
