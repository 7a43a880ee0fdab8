use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbinfluence"))
        .current_dir(dir)
        .env_remove("CBINFLUENCE_OUTPUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn address_summary_and_scalar_phase() {
    let dir = tempfile::tempdir().unwrap();
    let summary = json_stdout(&cli(dir.path(), &["gen", "address", "--d", "2", "-o", "a2.json", "--format", "json"]));
    assert_eq!(summary["variance"], 1.0);
    assert_eq!(summary["max_influence"]["value"], 0.5);
    cli(dir.path(), &["gen", "address", "--d", "4", "-o", "a4.json"]);
    let report = json_stdout(&cli(dir.path(), &["witness", "a4.json", "--method", "scalar-phase", "--format", "json"]));
    assert_eq!(report["achieved"], 4.0);
    let out = cli(dir.path(), &["witness", "a2.json", "--method", "sign-baseline", "--trials", "16", "--format", "json"]);
    assert!(json_stdout(&out)["achieved"].as_f64().unwrap() <= 1.0);
}

#[test]
fn pairings_prints_bare_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["pairings", "2", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "3\n");
}

#[test]
fn forrelation_circuit_validates_and_extracts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cli(dir.path(), &["gen", "forrelation", "--n", "4", "-o", "c.json"]).status.success());
    assert!(cli(dir.path(), &["extract", "c.json", "-o", "f.json"]).status.success());
    assert!(cli(dir.path(), &["extract", "c.json", "--fourier", "-o", "g.json"]).status.success());
    let a = json_stdout(&cli(dir.path(), &["influence", "f.json", "--format", "json"]));
    let b = json_stdout(&cli(dir.path(), &["influence", "g.json", "--format", "json"]));
    assert_eq!(a["variance"], b["variance"]);
    assert!(cli(dir.path(), &["check", "f.json"]).status.success());
    let out = cli(dir.path(), &["simulate", "f.json", "--eps", "0.25", "--delta", "0.25", "--budgets", "1,2,4,8,16", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("budget,epsilon,achieved_failing_fraction,mean_queries\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn check_fails_with_status_two() {
    // 64 variables of influence 1/64 each, against a bound of 1/(16e).
    let dir = tempfile::tempdir().unwrap();
    let terms: Vec<String> = (1..=64)
        .map(|i| format!(r#"{{"blocks": [1], "indices": [{i}], "coeff": 0.125}}"#))
        .collect();
    let form = format!(r#"{{"d": 1, "n": 64, "constant": 0.0, "terms": [{}]}}"#, terms.join(","));
    std::fs::write(dir.path().join("flat.json"), form).unwrap();
    let out = cli(dir.path(), &["check", "flat.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("violation"));
}

#[test]
fn failures_leave_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["gen", "forrelation", "--n", "3", "-o", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    let out = cli(dir.path(), &["influence", "missing.json", "-o", "inf.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn output_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("runs");
    let out = Command::new(env!("CARGO_BIN_EXE_cbinfluence"))
        .current_dir(dir.path())
        .env("CBINFLUENCE_OUTPUT_DIR", &target)
        .args(["gen", "address", "--d", "1", "-o", "a1.json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("a1.json").is_file());
}

#[test]
fn trace_reports_exact_moment() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&cli(dir.path(), &["trace", "1:1,2 1:2,1 -1:3,3", "1", "--format", "json"]));
    assert_eq!(v["moment"], 3);
    assert_eq!(v["l2_norm_sq"], 3.0);
    assert_eq!(v["holds"], true);
}
