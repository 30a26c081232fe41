mod common;

use common::fixture;
use serde_json::Value;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_superhedge"));
    c.env_remove("SUPERHEDGE_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn f(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn price_args(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = ["price", "--market", &f("trinomial.json"), "--claim", &f("call1.json")]
        .iter()
        .map(|s| s.to_string())
        .collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_owned(args: &[String]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn price_succeeds_with_exit_zero() {
    let out = run_owned(&price_args(&[]));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"], "price");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["verified"], true);
    assert!((v["primal"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["tolerance"].as_f64(), Some(1e-7));
}

#[test]
fn exact_price_has_zero_gap() {
    let v = json(&run_owned(&price_args(&["--exact"])));
    assert_eq!(v["gap"].as_f64(), Some(0.0));
    assert_eq!(v["exact"], true);
}

#[test]
fn tiny_tolerance_fails_verification_with_exit_two() {
    let out = run_owned(&price_args(&["--tol", "1e-30"]));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["verified"], false);
}

#[test]
fn flag_tolerance_beats_environment() {
    let args = price_args(&[]);
    let out = bin().args(&args).env("SUPERHEDGE_TOL", "1e-30").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let tol = json(&out)["tolerance"].as_f64().unwrap();
    assert!((tol / 1e-30 - 1.0).abs() < 1e-12, "{tol}");

    let args = price_args(&["--tol", "1e-3"]);
    let out = bin().args(&args).env("SUPERHEDGE_TOL", "1e-30").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["tolerance"].as_f64(), Some(1e-3));
}

#[test]
fn bad_tolerance_is_an_input_error() {
    for bad in ["0", "-1"] {
        let out = run_owned(&price_args(&[&format!("--tol={bad}")]));
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert_eq!(json(&out)["error"]["code"], "UsageError");
    }
    let out = bin().args(price_args(&[])).env("SUPERHEDGE_TOL", "abc").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["report"], "error");
}

#[test]
fn arbitrage_market_reports_no_measure() {
    let out = run(&["price", "--market", &f("arbitrage.json"), "--claim", &f("any.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "NoMeasure");
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(&["price", "--nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "UsageError");
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut args = price_args(&[]);
    args.extend(["--output".to_string(), path.to_string_lossy().into_owned()]);
    let out = run_owned(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["report"], "price");

    let check = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(json(&check)["kind"], "report");
}

#[test]
fn text_format_prints_key_value_lines() {
    let out = run_owned(&price_args(&["--format", "text"]));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("report: ")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("verified: true")), "{text}");
}

#[test]
fn output_is_deterministic() {
    let args = ["verify-representation", "--market", &f("binomial2.json"), "--samples", "10", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validate_reports_parse_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"schema_version\": 1,\n  \"tree\": [,]\n}\n").unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let err = &v["errors"][0];
    assert_eq!(err["code"], "ParseError");
    assert_eq!(err["line"], 3);
    assert!(err["column"].as_u64().unwrap() > 0);
}

#[test]
fn validate_catches_semantic_errors() {
    for name in ["orphan.json", "bad_density.json"] {
        let out = run(&["validate", &f(name)]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let v = json(&out);
        assert_eq!(v["ok"], false);
        assert!(!v["errors"].as_array().unwrap().is_empty());
    }
    let out = run(&["validate", &f("binomial2.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kind"], "market");
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run(&["polar", "--cone", "/nonexistent/cone.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "IoError");
}

#[test]
fn gap_study_runs() {
    let out = run(&["gap-study", "--levels", "10,20", "--lower-bound", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"], "gap_study");
    assert!(!v["rows"].as_array().unwrap().is_empty());
}
