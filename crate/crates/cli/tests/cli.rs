//! End-to-end tests of the `qac` binary: exit codes, file formats, and
//! byte-level determinism of written artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn replay_example_passes_with_exit_zero() {
    let out = qac(&["replay-example"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("replay: PASS"), "stdout: {text}");
    assert!(text.contains("alpha = 2"));
    assert!(text.contains("11/2"));
}

#[test]
fn replay_example_with_swapped_priority_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("priorities.txt");
    fs::write(&path, "1 3 0\n1 4 1\n2 1 0\n3 1 0\n3 4 1\n4 2 0\n").unwrap();
    let out = qac(&[
        "replay-example",
        "--priorities-file",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("alpha = 1"), "stdout: {text}");
    assert!(text.contains("22/4"));
}

fn write_ring(dir: &Path) -> String {
    let path = dir.join("ring.txt");
    fs::write(&path, "3\n1 2\n2 3\n3 1\n").unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn single_run_on_a_ring_reports_the_exact_average() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_ring(dir.path());
    let report_path = dir.path().join("report.json");
    let trace_path = dir.path().join("trace.jsonl");
    let series_path = dir.path().join("series.csv");
    let out = qac(&[
        "single",
        "--graph-file",
        &graph,
        "--values",
        "1,2,3",
        "--seed",
        "7",
        "--out",
        report_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
        "--series-out",
        series_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verification: PASS"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["exactness_verified"], true);
    assert_eq!(report["exact_average"], "2/1");
    // cross-product check at the terminal states: y_s * 3 == z_s * 6
    for t in report["terminal_states"].as_array().unwrap() {
        let y_s = t["y_s"].as_i64().unwrap();
        let z_s = t["z_s"].as_i64().unwrap();
        assert_eq!(y_s * 3, z_s * 6);
    }

    let trace = fs::read_to_string(&trace_path).unwrap();
    assert!(trace.lines().count() >= 3); // at least the initial broadcasts
    for line in trace.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record["kind"] == "broadcast" || record["kind"] == "directed");
    }

    let series = fs::read_to_string(&series_path).unwrap();
    assert!(series.starts_with("round,mean_state,"));
}

#[test]
fn identical_seeds_write_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let report_path = dir.path().join(format!("report_{name}.json"));
        let trace_path = dir.path().join(format!("trace_{name}.jsonl"));
        let out = qac(&[
            "single",
            "--nodes",
            "8",
            "--edge-prob",
            "0.4",
            "--seed",
            "99",
            "--value-range",
            "-50",
            "50",
            "--out",
            report_path.to_str().unwrap(),
            "--trace",
            trace_path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
        outputs.push((
            fs::read(&report_path).unwrap(),
            fs::read(&trace_path).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "reports differ");
    assert_eq!(outputs[0].1, outputs[1].1, "traces differ");
}

#[test]
fn small_batch_writes_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("batch.json");
    let out = qac(&[
        "batch",
        "--runs",
        "5",
        "--nodes",
        "6",
        "--edge-prob",
        "0.4",
        "--seed",
        "3",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["runs"], 5);
    assert_eq!(report["run_summaries"].as_array().unwrap().len(), 5);
    let aggregates = &report["aggregates"]["total_transmissions"];
    let (min, max, mean) = (
        aggregates["min"].as_u64().unwrap(),
        aggregates["max"].as_u64().unwrap(),
        aggregates["mean"].as_f64().unwrap(),
    );
    assert!(min as f64 <= mean && mean <= max as f64);
}

#[test]
fn configuration_errors_exit_two() {
    // value count does not match the node count
    let out = qac(&[
        "single",
        "--nodes",
        "5",
        "--edge-prob",
        "0.5",
        "--values",
        "1,2",
    ]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr(&out));

    // unknown flag (clap usage error)
    let out = qac(&["single", "--no-such-flag"]);
    assert_eq!(exit_code(&out), 2);

    // missing graph file
    let out = qac(&["single", "--graph-file", "/nonexistent/graph.txt"]);
    assert_eq!(exit_code(&out), 2);

    // priority file without a graph file
    let out = qac(&["single", "--priorities-file", "/nonexistent/p.txt"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn verification_failures_exit_one() {
    // an unreachable round cap makes the run fail its convergence check
    let out = qac(&[
        "single",
        "--nodes",
        "8",
        "--edge-prob",
        "0.3",
        "--seed",
        "5",
        "--max-rounds",
        "1",
    ]);
    assert_eq!(exit_code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("verification failure"));
}
