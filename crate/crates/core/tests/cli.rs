//! End-to-end checks of the command-line binary: exit codes, report
//! formats, and machine-file round trips.

use std::process::Command;

use gradualenv::mechanics::MachineFile;

fn gradualenv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradualenv"))
}

#[test]
fn run_oracle_structured_report() {
    let out = gradualenv()
        .args(["run", "--agent", "oracle", "--tasks", "micro_fixed,micro_map_a21", "--format", "structured"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["total_steps"], 20);
    assert_eq!(report["per_task"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_task_exits_2() {
    let out = gradualenv()
        .args(["run", "--tasks", "no_such_task"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_curriculum_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"version\": 99}").unwrap();
    let out = gradualenv()
        .args(["run", "--curriculum", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_step_budget_exits_3() {
    // The memorizer cannot finish the curriculum in 10 steps.
    let out = gradualenv()
        .args(["run", "--agent", "memorizer", "--tasks", "micro_fixed", "--budget-steps", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn model_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let machine = dir.path().join("machine.json");
    let status = gradualenv()
        .args(["model", "--task", "micro_map_a21", "--output", machine.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    let file: MachineFile = serde_json::from_str(&std::fs::read_to_string(&machine).unwrap()).unwrap();
    file.validate().unwrap();

    let a = gradualenv()
        .args(["export", "--input", machine.to_str().unwrap()])
        .output()
        .unwrap();
    let b = gradualenv()
        .args(["export", "--input", machine.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(a.status.success());
    let dot = String::from_utf8(a.stdout).unwrap();
    assert!(dot.starts_with("digraph machine {"));
    assert_eq!(dot, String::from_utf8(b.stdout).unwrap(), "DOT export not deterministic");

    let filtered = gradualenv()
        .args(["export", "--input", machine.to_str().unwrap(), "--hide-negative"])
        .output()
        .unwrap();
    let filtered = String::from_utf8(filtered.stdout).unwrap();
    assert!(filtered.matches(" -> ").count() < dot.matches(" -> ").count());
}

#[test]
fn reconstruct_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.bin");
    // Alternating process: two causal states.
    let bytes: Vec<u8> = (0..100_000).map(|i| if i % 2 == 0 { b'0' } else { b'1' }).collect();
    std::fs::write(&seq, &bytes).unwrap();
    let machine = dir.path().join("machine.json");
    let out = gradualenv()
        .args([
            "reconstruct",
            "--input", seq.to_str().unwrap(),
            "--l-max", "3",
            "--alpha", "0.001",
            "--output", machine.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let file: MachineFile = serde_json::from_str(&std::fs::read_to_string(&machine).unwrap()).unwrap();
    assert_eq!(file.state_count(), 2);
}

#[test]
fn analyze_default_curriculum_is_ordered() {
    let out = gradualenv()
        .args(["analyze", "--format", "structured"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["order_ok"], true);
}
