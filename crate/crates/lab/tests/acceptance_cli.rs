//! End-to-end tests of the `lab` binary: suite verdicts, the exit-code
//! contract, report determinism, overrides, and export shapes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lab"));
    // The ambient environment must not leak into the contract under test.
    cmd.env_remove("LAB_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    lab().args(args).output().expect("spawning the lab binary")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout should be JSON")
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SHEAR2: &str = r#"{"family": "parabolic_shear", "params": {"k": 2.0},
    "domain": {"space": {"kind": "euclidean", "dim": 2}, "center": [0, 0], "radius": 1.0},
    "codomain_space": {"kind": "euclidean", "dim": 2}}"#;

#[test]
fn paper_verification_suite_passes_and_asserts_every_bound() {
    let out = run(&["suite", "paper-verification"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = stdout_json(&out);
    assert_eq!(rep["passed"], true);
    let members = rep["scenarios"].as_array().unwrap();
    assert_eq!(members.len(), 9);
    for m in members {
        let label = m["label"].as_str().unwrap();
        assert_eq!(m["passed"], true, "{label} failed: {}", m["failures"]);
        assert_eq!(m["results"]["bound_holds"], true, "{label}");
        if let Some(h) = m["results"].get("hilbert_bound_holds") {
            assert_eq!(h, &Value::Bool(true), "{label}");
        }
        // Every member embeds the scenario that produced it.
        assert!(m["scenario"]["map"]["domain"].is_object(), "{label}");
    }
}

#[test]
fn degeneracy_demo_certifies_nonconvexity_with_a_zero_bound() {
    let out = run(&["suite", "degeneracy-demo"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = stdout_json(&out);
    assert_eq!(rep["passed"], true);
    let members = rep["scenarios"].as_array().unwrap();
    assert_eq!(members.len(), 6);

    let mut verify_count = 0;
    for m in members {
        let label = m["label"].as_str().unwrap();
        assert_eq!(m["passed"], true, "{label} failed: {}", m["failures"]);
        match m["task"].as_str().unwrap() {
            "verify" => {
                verify_count += 1;
                assert_eq!(m["results"]["verdict"]["verdict"], "non_convex", "{label}");
                assert!(m["results"]["verdict"]["witness"].is_object(), "{label}");
            }
            "bound" => {
                assert_eq!(m["results"]["bound"].as_f64(), Some(0.0), "{label}");
                assert_eq!(m["results"]["bound_holds"], true, "{label}");
            }
            other => panic!("unexpected member task {other}"),
        }
    }
    assert_eq!(verify_count, 5);
}

#[test]
fn reports_are_byte_identical_for_identical_scenario_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "conv2.json",
        r#"{"space": {"kind": "linf", "dim": 2}, "task": "conv2",
            "params": {"samples": 4000}, "seed": 17}"#,
    );

    let a = run(&["run", &sc]);
    let b = run(&["run", &sc]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "two runs of one scenario and seed must match byte for byte");

    // Thread caps must not change the report either.
    let out1 = dir.path().join("t1.json");
    let out3 = dir.path().join("t3.json");
    let s1 = lab()
        .args(["run", &sc, "--out", out1.to_str().unwrap()])
        .env("LAB_THREADS", "1")
        .output()
        .unwrap();
    let s3 = lab()
        .args(["run", &sc, "--out", out3.to_str().unwrap()])
        .env("LAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(s1.status.code(), Some(0));
    assert_eq!(s3.status.code(), Some(0));
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out3).unwrap());

    // A different seed actually reaches the estimator.
    let c = run(&["run", &sc, "--seed", "18"]);
    assert_eq!(c.status.code(), Some(0));
    let rep = stdout_json(&c);
    assert_eq!(rep["scenario"]["seed"], 18);
    assert_eq!(rep["results"]["estimate"]["seed"], 18);
}

#[test]
fn suite_reports_are_byte_identical_across_runs() {
    let a = run(&["suite", "degeneracy-demo"]);
    let b = run(&["suite", "degeneracy-demo"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // 0: a clean run.
    let ok = write_scenario(
        dir.path(),
        "ok.json",
        r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "conv2", "params": {"samples": 2000}}"#,
    );
    assert_eq!(run(&["run", &ok]).status.code(), Some(0));

    // 1: a check that honestly fails. The two openness routes sit about a
    // percent apart on this map, so a 1e-9 agreement tolerance must trip.
    let tight = write_scenario(
        dir.path(),
        "tight.json",
        &format!(r#"{{"map": {SHEAR2}, "task": "lipo", "params": {{"agreement_tol": 1e-9}}}}"#),
    );
    let out = run(&["run", &tight]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disagree"));

    // 2: unreadable, malformed, and invalid inputs, each with a diagnostic
    // naming the problem.
    let missing = dir.path().join("missing.json");
    let out = run(&["run", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let malformed = write_scenario(dir.path(), "malformed.json", "{not json");
    let out = run(&["run", &malformed]);
    assert_eq!(out.status.code(), Some(2));

    let unknown_field = write_scenario(
        dir.path(),
        "unknown_field.json",
        r#"{"space": {"kind": "euclidean", "dmi": 2}, "task": "conv2"}"#,
    );
    let out = run(&["run", &unknown_field]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("unknown field `dmi`"),
        "diagnostic must name the field: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad_param = write_scenario(
        dir.path(),
        "bad_param.json",
        r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "conv2", "params": {"sampels": 5}}"#,
    );
    let out = run(&["run", &bad_param]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sampels"));

    let out = run(&["suite", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-suite"));

    let out = lab().args(["run", &ok]).env("LAB_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("LAB_THREADS"));

    // Usage errors from the argument parser also land on 2.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overrides_reach_the_estimator_and_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "conv2.json",
        r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "conv2", "seed": 1}"#,
    );
    let out = run(&["run", &sc, "--samples", "700", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = stdout_json(&out);
    assert_eq!(rep["scenario"]["params"]["samples"], 700);
    assert_eq!(rep["scenario"]["seed"], 42);
    assert_eq!(rep["results"]["estimate"]["samples"], 700);
    assert_eq!(rep["results"]["estimate"]["seed"], 42);
    assert_eq!(rep["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn csv_export_is_flat_with_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "delta.json",
        r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "delta",
            "params": {"t_grid": [0.5, 1.0, 1.5], "samples": 3000}, "seed": 2}"#,
    );
    let csv_path = dir.path().join("delta.csv");
    let out = run(&["run", &sc, "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scenario,task,item,x,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let delta_rows: Vec<_> = rows.iter().filter(|r| r[2] == "delta").collect();
    let exact_rows: Vec<_> = rows.iter().filter(|r| r[2] == "delta_exact").collect();
    assert_eq!(delta_rows.len(), 3);
    assert_eq!(exact_rows.len(), 3);
    for r in &delta_rows {
        assert_eq!(r[0], "delta");
        assert_eq!(r[1], "delta");
        r[3].parse::<f64>().expect("grid abscissa");
        r[4].parse::<f64>().expect("sampled value");
    }
}

#[test]
fn a_suite_can_run_as_a_scenario_task() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "suite.json",
        r#"{"task": "suite", "params": {"name": "degeneracy-demo"}}"#,
    );
    let out = run(&["run", &sc]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep = stdout_json(&out);
    assert_eq!(rep["results"]["passed"], true);
    assert_eq!(rep["results"]["scenarios"].as_array().unwrap().len(), 6);
}

#[test]
fn describe_lists_the_registered_pieces() {
    let spaces = run(&["describe", "spaces"]);
    assert_eq!(spaces.status.code(), Some(0));
    let text = String::from_utf8_lossy(&spaces.stdout).into_owned();
    for name in ["euclidean", "l1", "linf", "lp", "weighted_lp"] {
        assert!(text.contains(name), "missing space {name}");
    }

    let maps = run(&["describe", "maps"]);
    assert_eq!(maps.status.code(), Some(0));
    let text = String::from_utf8_lossy(&maps.stdout).into_owned();
    for name in ["linear", "parabolic_shear", "quadratic_perturbation", "composed"] {
        assert!(text.contains(name), "missing family {name}");
    }

    let tasks = run(&["describe", "tasks"]);
    assert_eq!(tasks.status.code(), Some(0));
    let text = String::from_utf8_lossy(&tasks.stdout).into_owned();
    for name in [
        "delta", "conv2", "omega", "lip1", "lip2", "dcheck", "lipo", "verify", "lcr", "bound",
        "claim1", "suite", "paper-verification", "degeneracy-demo",
    ] {
        assert!(text.contains(name), "missing task or suite {name}");
    }
}

#[test]
fn timings_are_attached_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "conv2.json",
        r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "conv2", "params": {"samples": 1000}}"#,
    );
    let plain = stdout_json(&run(&["run", &sc]));
    assert!(plain.get("wall_time_ms").is_none());

    let timed = stdout_json(&run(&["run", &sc, "--timings"]));
    assert!(timed["wall_time_ms"].as_f64().is_some());
}
