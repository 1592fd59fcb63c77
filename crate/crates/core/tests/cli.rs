use std::path::Path;
use std::process::{Command, Output};

fn wellposed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wellposed")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn passing_run_prints_report() {
    let out = wellposed(&["--kind", "quadruple-identities", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["config"]["seed"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS quadruple-identities/semigroup"));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kind": "radius", "trials": 3, "tolerances": {"preserved_sigma_ratio": 10}}"#);
    let out = wellposed(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL radius/preserved_sigma_ratio"));
}

#[test]
fn usage_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let bad = write(dir.path(), "bad.json", r#"{"kind": "radius", "tolerances": {"nope": 1}}"#);
    for args in [
        vec!["--config", bad.as_str()],
        vec!["--kind", "teleport"],
        vec!["--profile", "medium"],
        vec!["--kind", "radius", "--profile", "quick"],
        vec![],
    ] {
        let mut full = args.clone();
        let od = out_dir.to_str().unwrap();
        full.extend(["--out", od]);
        let out = wellposed(&full);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out_dir.exists(), "{args:?} left output behind");
    }
}

#[test]
fn missing_config_file_is_usage_error() {
    let out = wellposed(&["--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_override_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_wellposed"))
        .args(["--kind", "radius"])
        .env("WELLPOSED_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "x");
    let cfg = write(dir.path(), "c.json", r#"{"kind": "radius", "trials": 2}"#);
    let out = wellposed(&["--config", &cfg, "--out", &blocker]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn out_dir_gets_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("run");
    let out = wellposed(&["--kind", "compose-cross", "--out", od.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(od.join("report.json").is_file());
    assert!(od.join("compose.csv").is_file());
}

#[test]
fn list_names_every_kind() {
    let out = wellposed(&["--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().any(|l| l == "beam-observability"));
}
