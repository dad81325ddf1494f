//! End-to-end checks of the `verify` binary: exit codes, listing, and
//! report files.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_verify")
}

#[test]
fn list_prints_all_suites() {
    let out = Command::new(bin()).arg("--list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in fermi_rg::suites::SUITE_IDS {
        assert!(text.contains(id), "missing suite {id} in --list output");
    }
}

#[test]
fn empty_suite_list_gives_empty_valid_report_and_success() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"suites": []}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let status = Command::new(bin())
        .args(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert!(parsed.as_array().unwrap().is_empty());
}

#[test]
fn failing_suite_exits_one_with_failure_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    // a generator budget of 12 cannot accommodate the lattice suites
    std::fs::write(
        &cfg,
        r#"{"suites": ["lemma-VII.5"], "budgets": {"max-generators": 12, "max-seconds": 600}}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let status = Command::new(bin())
        .args(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let entry = &parsed.as_array().unwrap()[0];
    assert_eq!(entry["pass"], serde_json::Value::Bool(false));
    assert!(entry["metrics"]["failure"]
        .as_str()
        .unwrap()
        .contains("budget"));
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"suites": ["definitely-not-a-suite"]}"#).unwrap();
    let status = Command::new(bin())
        .args(["--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    std::fs::write(&cfg, "{ this is not json").unwrap();
    let status = Command::new(bin())
        .args(["--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn seed_and_suite_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let status = Command::new(bin())
        .args([
            "--suite",
            "partition-of-unity",
            "--seed",
            "123",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let arr = parsed.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    assert_eq!(arr[0]["suite"], "partition-of-unity");
    assert_eq!(arr[0]["seed"], 123);
}
