use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auction-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn params_prints_json() {
    let out = cli(&["params", "--psi-min", "1", "--psi-max", "1000000"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["alpha"], 2);
    assert_eq!(v["beta"], 2);
    assert_eq!(v["gamma"], "80");
    assert_eq!(v["t"], 4);
}

#[test]
fn gen_run_trace_truthtest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"n": 4, "m": 3, "family": "xos-random", "clauses": [1, 2], "values": ["1", "100"], "seed": 5}"#,
    );
    let inst = dir.path().join("inst.json");
    let inst = inst.to_str().unwrap();
    assert!(cli(&["gen", "--spec", &spec, "-o", inst]).status.success());

    let csv = dir.path().join("report.csv");
    let out = cli(&["run", "--instance", inst, "--trials", "20", "--seed", "3", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 21);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["ratio"].as_f64().unwrap() >= 1.0);

    let out = cli(&["trace", "--instance", inst, "--seeds", "5", "--min-seeds", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("seed,iteration,"));

    let out = cli(&["truthtest", "--instance", inst, "--seeds", "4", "--deviations", "3"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["comparisons"], 4 * 4 * 3);
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn bad_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"m": 2, "bidders": [{"kind": "xos", "clauses": [["1"]]}]}"#);
    let out = cli(&["run", "--instance", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!cli(&["params", "--psi-min", "5", "--psi-max", "1"]).status.success());
}
