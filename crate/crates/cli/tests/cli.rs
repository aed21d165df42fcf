use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const AB: &str = r#"{"dims":1,"objective":{"type":"modular"}}
{"id":0,"coords":[[0,1,4]],"value":[1,1]}
{"id":1,"coords":[[0,1,4]],"value":[10,1]}
"#;

fn vpack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpack"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vpack-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn run_phase_generator() {
    let v = json(&vpack(&[
        "run",
        "--generator",
        "noslack",
        "-p",
        "d=6",
        "--seed",
        "3",
    ]));
    assert_eq!(v["opt_value"], "6");
    // 21 items: small enough for the exact solver
    assert_eq!(v["opt_source"], "brute_force");
    assert!(v["ratio"].is_string());
    assert_eq!(v["audit_ok"], true);
}

#[test]
fn run_instance_file() {
    let path = scratch("ab.jsonl");
    std::fs::write(&path, AB).unwrap();
    let out = vpack(&["run", path.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["final_set"], serde_json::json!([1]));
    assert_eq!(v["f_s"], "10");
    assert!(String::from_utf8_lossy(&out.stderr).contains("f(S)=10"));
}

#[test]
fn run_empty_instance() {
    let path = scratch("empty.jsonl");
    std::fs::write(
        &path,
        "{\"dims\":3,\"objective\":{\"type\":\"cardinality\"}}\n",
    )
    .unwrap();
    let v = json(&vpack(&["run", path.to_str().unwrap()]));
    assert_eq!(v["f_s"], "0");
    assert_eq!(v["opt_value"], "0");
    assert_eq!(v["ratio"], "1");
}

#[test]
fn malformed_file_exits_with_a_line_number() {
    let path = scratch("bad.jsonl");
    std::fs::write(
        &path,
        format!("{AB}{{\"id\":2,\"coords\":[[5,1,2]],\"value\":[1,1]}}\n"),
    )
    .unwrap();
    let out = vpack(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(vpack(&["sweep", "nope"]).status.code(), Some(1));
    assert_eq!(vpack(&["run"]).status.code(), Some(1));
    assert_eq!(
        vpack(&["duel", "slack-subsets", "-p", "q=3"]).status.code(),
        Some(1)
    );
    assert_eq!(vpack(&["--help"]).status.code(), Some(0));
}

#[test]
fn one_trial_sweep_row_equals_a_run_row() {
    let sweep = vpack(&[
        "sweep", "noslack", "-p", "d=5", "--trials", "1", "--seed", "9", "--format", "csv",
    ]);
    let run = vpack(&[
        "run",
        "--generator",
        "noslack",
        "-p",
        "d=5",
        "--seed",
        "9",
        "--format",
        "csv",
    ]);
    assert!(sweep.status.success() && run.status.success());
    let sweep = String::from_utf8(sweep.stdout).unwrap();
    let run = String::from_utf8(run.stdout).unwrap();
    assert_eq!(sweep.lines().count(), 2);
    assert_eq!(sweep, run);
}

#[test]
fn sweep_writes_summary_and_rows() {
    let stem = scratch("noslack");
    let out = vpack(&[
        "sweep",
        "noslack",
        "-p",
        "d=4",
        "--trials",
        "5",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(summary["trials"], 5);
    assert_eq!(summary["expected_value_bound"], "25/12");
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("seed,n_items,k_observed,f_S,opt,ratio,bound,bound_ok"));
}

#[test]
fn duels_against_both_algorithms() {
    let v = json(&vpack(&["duel", "slack-deterministic", "-p", "k=4"]));
    assert!(v["ratio_approx"].as_f64().unwrap() >= 2.0 - 1e-9);
    for alg in ["engine", "greedy"] {
        let v = json(&vpack(&[
            "duel",
            "slack-subsets",
            "-p",
            "k=3",
            "--algorithm",
            alg,
        ]));
        assert!(v["final_set"].as_array().unwrap().len() <= 1);
        assert!(v["n_items"].as_u64().unwrap() <= 6);
    }
}

#[test]
fn gen_then_rescale_then_run() {
    let raw = scratch("phase.jsonl");
    let scaled = scratch("phase-scaled.jsonl");
    assert!(vpack(&[
        "gen",
        "noslack",
        "-p",
        "d=6",
        "--seed",
        "1",
        "--out",
        raw.to_str().unwrap()
    ])
    .status
    .success());
    let out = vpack(&[
        "rescale",
        raw.to_str().unwrap(),
        "--epsilon",
        "1/4",
        "--out",
        scaled.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&scaled).unwrap();
    assert!(text
        .lines()
        .next()
        .unwrap()
        .contains("\"rescaled\":\"4/5\""));
    // the largest scaled weight is (4/5)(1 - 2^-12)
    let v = json(&vpack(&["run", scaled.to_str().unwrap()]));
    assert_eq!(v["params"]["epsilon"], "205/1024");
    let v = json(&vpack(&[
        "run",
        scaled.to_str().unwrap(),
        "--epsilon",
        "1/5",
    ]));
    assert_eq!(v["opt_value"], "6");
    assert_eq!(v["audit_ok"], true);
}
