use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nashqec::game::GameTrajectory;
use nashqec::noise::pentagon_graph;
use nashqec::runner::RunSummary;

fn nashqec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashqec"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path) {
    fs::write(
        dir.join("cfg.json"),
        r#"{"objective": "hardware", "n_out": 8, "n_in": 3, "constraints": {"max_degree": 3},
            "max_iterations": 10, "proposals": 4, "trials": 3, "master_seed": 5}"#,
    )
    .unwrap();
}

#[test]
fn discover_then_analyze_and_pareto() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d);
    let o = nashqec(&["discover", "--config", "cfg.json", "--out", "run", "--workers", "2"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["run.json", "summary.csv", "summary.json", "pareto.csv", "timing.json", "trial_0.jsonl", "trial_2.jsonl"] {
        assert!(d.join("run").join(f).exists(), "missing {f}");
    }
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(d.join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.trials.len(), 3);
    assert_eq!(summary.config.workers, 1);
    let csv = fs::read_to_string(d.join("run/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let text = fs::read_to_string(d.join("run/trial_1.jsonl")).unwrap();
    let traj = GameTrajectory::from_jsonl(&text).unwrap();
    assert_eq!(traj.final_graph, summary.trials[1].final_code.graph);

    let o = nashqec(&["analyze", "run/trial_1.jsonl", "--out", "an"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(d.join("an/series.csv")).unwrap();
    assert!(series.starts_with("t,d,total_reward\n"));
    let analysis: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("an/analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["replay_consistent"], serde_json::json!(true));

    let o = nashqec(&["pareto", "run/summary.json"], d);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("rate,d,n,k,source\n"));
}

#[test]
fn seed_override_changes_results_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d);
    assert!(nashqec(&["discover", "--config", "cfg.json", "--out", "a"], d).status.success());
    assert!(nashqec(&["discover", "--config", "cfg.json", "--out", "b", "--seed", "6"], d).status.success());
    let a: RunSummary = serde_json::from_str(&fs::read_to_string(d.join("a/summary.json")).unwrap()).unwrap();
    let b: RunSummary = serde_json::from_str(&fs::read_to_string(d.join("b/summary.json")).unwrap()).unwrap();
    assert_eq!(a.config.master_seed, 5);
    assert_eq!(b.config.master_seed, 6);
    assert_ne!(a.trials[0].seed, b.trials[0].seed);
}

#[test]
fn corrupt_trajectory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let o = nashqec(&["analyze", "empty.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_noise_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = nashqec(
        &["simulate", "--fixture", "pentagon", "--p-grid", "0.01,0.05", "--trials", "5000", "--seed", "2", "--out", "noise.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("noise.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,trials,failures,eps_L,std_err");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.01,5000,"));
}

#[test]
fn circuit_and_distance_of_a_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("pentagon.txt"), pentagon_graph().to_edge_list()).unwrap();

    let o = nashqec(&["distance", "pentagon.txt"], d);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["n"], 5);
    assert_eq!(report["k"], 1);
    assert_eq!(report["d"], 3);
    assert_eq!(report["d_certainty"], "exact");

    let o = nashqec(&["circuit", "pentagon.txt", "--out", "prep.qct"], d);
    assert!(o.status.success());
    let text = fs::read_to_string(d.join("prep.qct")).unwrap();
    assert!(text.starts_with("qubits 6\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("CZ")).count(), 10);
    let o = nashqec(&["circuit", "prep.qct", "--check"], d);
    assert!(o.status.success());
    assert_eq!(stdout(&o), text);

    let o = nashqec(&["circuit", "pentagon.txt", "--syndrome", "1,2"], d);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "M 6"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(nashqec(&["distance", "missing.txt"], d).status.code(), Some(3));
    assert_eq!(nashqec(&["discover", "--config", "missing.json"], d).status.code(), Some(3));
    fs::write(d.join("bad.json"), r#"{"objective": "nope", "n_out": 5, "n_in": 1}"#).unwrap();
    assert_eq!(nashqec(&["discover", "--config", "bad.json"], d).status.code(), Some(2));
    fs::write(d.join("typo.json"), r#"{"objective": "distance", "n_out": 5, "n_in": 1, "trails": 3}"#).unwrap();
    assert_eq!(nashqec(&["discover", "--config", "typo.json"], d).status.code(), Some(2));
    assert_eq!(nashqec(&["discover"], d).status.code(), Some(2));
    fs::write(d.join("g.txt"), "1 2\n0 1\n").unwrap();
    assert_eq!(nashqec(&["distance", "g.txt", "--backend", "bogus"], d).status.code(), Some(2));

    write_config(d);
    fs::write(d.join("blocker"), "").unwrap();
    let o = nashqec(&["discover", "--config", "cfg.json", "--out", "blocker/run"], d);
    assert_eq!(o.status.code(), Some(3));
}
