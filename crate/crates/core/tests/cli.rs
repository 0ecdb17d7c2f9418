use std::path::Path;
use std::process::{Command, Output};

use crowdsort::assignment::AssignmentPlan;

fn crowdsort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdsort"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn params_at_defaults() {
    let out = crowdsort(&["params"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["contract"]["v"], 12);
    assert_eq!(json["contract"]["r"], 10);
    assert!((json["payment"].as_f64().unwrap() - 6.746).abs() < 1e-3);
}

#[test]
fn plan_is_valid_json() {
    let out = crowdsort(&["plan", "--n", "30", "--s", "12", "--seed", "3"]);
    assert!(out.status.success());
    let plan = AssignmentPlan::from_json(&stdout(&out)).unwrap();
    assert_eq!((plan.n, plan.agents), (30, 12));
    // ⌈log₂(2·0.2·12 / 0.01)⌉ = ⌈log₂ 480⌉
    assert_eq!(plan.verified.len(), 9);
}

#[test]
fn simulate_writes_csv_sidecar_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n": 30, "s": 30, "seed": 1, "trials": 7}"#);
    let csv = dir.path().join("out.csv");
    let trace = dir.path().join("trials.jsonl");
    let out = crowdsort(&[
        "simulate",
        "--config",
        &cfg,
        "--trials",
        "3",
        "--seed",
        "9",
        "--out",
        csv.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("value,feasible,trials,ci_level,payment,self_sort,u_contract_mean"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["seed"], 9);
    assert_eq!(sidecar["config"]["trials"], 3);
    assert_eq!(sidecar["config"]["n"], 30);
    let lines: Vec<String> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 3);
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(first["trial"], 0);
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n": 25, "s": 25, "trials": 2, "sweep": {"variable": "psi", "values": [0.01, 0.02, 0.03]}}"#,
    );
    let out = crowdsort(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("0.01,true,2,"));
}

#[test]
fn optimize_g_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"model": "unknown", "psi_bar": 3, "lambda": 3, "distribution": {"mean": 0.03, "sd": 0.01, "samples": 145}}"#,
    );
    let out = crowdsort(&["optimize-g", "--config", &cfg]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("g,feasible,p_g,v_g,r_g,E(p_g)\n"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn exit_codes() {
    assert_eq!(crowdsort(&["params", "--s", "5", "--strict"]).status.code(), Some(2));
    assert_eq!(crowdsort(&["params", "--s", "5"]).status.code(), Some(0));
    assert_eq!(
        crowdsort(&["params", "--config", "/nonexistent/cfg.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(crowdsort(&["optimize-g"]).status.code(), Some(1));
    assert_eq!(crowdsort(&["params", "--trials", "0"]).status.code(), Some(1));
}
