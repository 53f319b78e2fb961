use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use proctens::config::{InlineScenario, RunConfig};
use proctens::report::to_canonical_json;
use proctens::scenarios;

fn proctens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proctens")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_report(config: &str) -> Value {
    let out = proctens(&["run", "--config", config]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn cnot_report_is_divisible_and_non_markovian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cnot.json",
        r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["divisibility", "witness"]}"#,
    );
    let report = run_report(&cfg);
    assert_eq!(report["results"]["divisibility"]["divisible"], Value::Bool(true));
    assert_eq!(report["results"]["witness"]["verdict"], "non-markovian");
    assert!(report["results"]["witness"]["max_discrepancy"].as_f64().unwrap() > 0.99);
}

#[test]
fn factorized_measure_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fact.json",
        r#"{"scenario": {"name": "factorized_random", "seed": 3, "params": {"d_env": 3}}, "analysis": ["measure"]}"#,
    );
    let nm = run_report(&cfg)["results"]["measure"]["non_markovianity"].as_f64().unwrap();
    assert!(nm.abs() <= 1e-9, "{nm}");
}

#[test]
fn reports_are_deterministic_outside_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "det.json",
        r#"{"scenario": {"name": "random", "seed": 11}, "analysis": ["tensor", "cji", "mps", "witness", "measure", "trace-distance-curve"]}"#,
    );
    let mut a = run_report(&cfg);
    let mut b = run_report(&cfg);
    assert_eq!(a["meta"]["digest"], b["meta"]["digest"]);
    a.as_object_mut().unwrap().remove("timing");
    b.as_object_mut().unwrap().remove("timing");
    assert_eq!(to_canonical_json(&a).unwrap(), to_canonical_json(&b).unwrap());
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"scenario": {"name": "double_swap"}, "analysis": ["cji"]}"#);
    let out_path = dir.path().join("report.json");
    let out = proctens(&["run", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(report["results"]["cji"]["steps"], 2);
}

#[test]
fn inline_scenarios_round_trip_through_reports() {
    let sc = scenarios::random_seeded(2, 3, 2, 42).unwrap();
    let inline = serde_json::to_value(InlineScenario::from_scenario(&sc)).unwrap();
    let cfg_text = serde_json::json!({"scenario": {"inline": inline}, "analysis": ["cji"]}).to_string();
    let dir = tempfile::tempdir().unwrap();
    let report = run_report(&write(dir.path(), "inline.json", &cfg_text));
    let echoed: RunConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(echoed.scenario().unwrap(), sc);
}

#[test]
fn double_swap_measure_is_two_bits_of_memory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ds.json", r#"{"scenario": {"name": "double_swap"}, "analysis": ["measure"]}"#);
    let report = run_report(&cfg);
    let nm = report["results"]["measure"]["non_markovianity"].as_f64().unwrap();
    assert!((nm - 4f64.ln()).abs() < 1e-9, "{nm}");
    let p1 = report["results"]["measure"]["confusion_probability"]["1"].as_f64().unwrap();
    assert!((p1 - 0.25).abs() < 1e-9);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let cases = [
        r#"{"scenario": {"name": "cnot_memory"}, "analysis": []}"#,
        r#"{"scenario": {"name": "no_such"}, "analysis": ["cji"]}"#,
        r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["cji"], "k": 9}"#,
        "{",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        let out = proctens(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(proctens(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(proctens(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn size_guards_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "big.json",
        r#"{"scenario": {"name": "random", "seed": 1, "params": {"steps": 7}}, "analysis": ["tensor"]}"#,
    );
    let out = proctens(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_proctens"))
        .arg("list-scenarios")
        .env("PROCTENS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_scenarios_names_every_family() {
    let out = proctens(&["list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["cnot_memory", "partial_swap", "double_swap", "dephasing_echo", "random", "factorized_random"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
