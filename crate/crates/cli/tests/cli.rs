use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rhh-lgp"))
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn plan_writes_trajectory_summary_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["plan", "--task", "climb-2", "--size", "1", "--heuristics", "action-specific", "--out", out.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("solved "));
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["status"], "solved");
    assert_eq!(summary["actions"].as_array().unwrap().len(), 2);
    let metrics = json(&out.join("metrics.json"));
    for k in ["time_s", "tree_nodes", "expanded", "seq_solves", "path_solves", "sol_len"] {
        assert!(metrics.get(k).is_some(), "{k}");
    }
    assert_eq!(metrics["sol_len"], 2);
    let dump = fs::read_to_string(out.join("trajectory.txt")).unwrap();
    assert_eq!(dump.lines().count(), 40);
    assert!(dump.lines().all(|l| l.starts_with("t=")));
}

#[test]
fn non_receding_plan_runs_one_episode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run(&["plan", "--task", "climb-2", "--size", "2", "--no-receding", "--seed", "3", "--out", out.to_str().unwrap()]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["episodes"].as_array().unwrap().len(), 1);
}

#[test]
fn bench_writes_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.toml");
    fs::write(
        &matrix,
        "[[cell]]\ntask = \"climb-2\"\nsize = 1\n\n[[cell]]\ntask = \"climb-2\"\nsize = 1\nheuristics = \"none\"\nhorizon = 2\nnode_budget = 0\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        run(&["bench", "--matrix", matrix.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-timing"]);
    }
    let csv = fs::read_to_string(&a).unwrap();
    assert_eq!(csv, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "task,scene_size,heuristics,horizon,time_s,tree_nodes,expanded,sol_len,status");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",2,solved"), "{}", lines[1]);
    assert_eq!(lines[2], "climb-2,1,none,2,,0,0,,timeout");
}

#[test]
fn unknown_task_is_rejected() {
    let out = bin().args(["plan", "--task", "juggle", "--out", "/nonexistent"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn malformed_matrix_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.toml");
    fs::write(&matrix, "[[cell]]\ntask = \"climb-2\"\nsize = 1\ncolour = \"red\"\n").unwrap();
    let out = bin()
        .args(["bench", "--matrix", matrix.to_str().unwrap(), "--out", dir.path().join("o.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
