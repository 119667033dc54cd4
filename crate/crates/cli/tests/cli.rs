//! End-to-end tests of the `ksym` binary: exit codes, report artifacts,
//! and the shipped example system files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ksym() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ksym"))
}

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn run(args: &[&str]) -> Output {
    ksym().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn classify_shipped_laplace_file() {
    let file = systems_dir().join("laplace.json");
    let out = run(&["classify", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("candidate `translation` (lift): order 1"),
        "{text}"
    );
    assert!(
        text.contains("candidate `dilation` (lift): order 1"),
        "{text}"
    );
}

#[test]
fn classify_reports_no_order_for_dilation_on_inverse_q() {
    let file = systems_dir().join("inverse_q.json");
    let out = run(&["classify", file.to_str().unwrap(), "--nmax", "5"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("candidate `dilation` (full): no order <= 5"),
        "{text}"
    );
    assert!(text.contains("candidate `boost` (full): order 2"), "{text}");
}

#[test]
fn malformed_expression_exits_one_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 1, "k": 1, "hamiltonian": "q_1 + "}"#).unwrap();
    let out = run(&["classify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("hamiltonian") && err.contains("byte 6"),
        "{err}"
    );
}

#[test]
fn unknown_identifier_exits_one_naming_the_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 1, "k": 1, "hamiltonian": "sin(q_2)"}"#).unwrap();
    let out = run(&["classify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("`q_2`"), "{}", stderr(&out));
}

#[test]
fn charge_refuses_candidates_without_lie_h_zero() {
    let file = systems_dir().join("laplace.json");
    let out = run(&["charge", file.to_str().unwrap(), "--candidate", "dilation"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("does not preserve H"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn charge_emits_closed_forms() {
    let file = systems_dir().join("inverse_q.json");
    let out = run(&["charge", file.to_str().unwrap(), "--candidate", "boost"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("g^1 = p_1_1/q_1"), "{text}");
    assert!(text.contains("route agreement: [zero]"), "{text}");
}

#[test]
fn simulate_writes_csv_and_missing_grid_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flow.csv");
    let file = systems_dir().join("oscillator.json");
    let out = run(&[
        "simulate",
        file.to_str().unwrap(),
        "--grid",
        "flow",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("t_1,q_1,p_1_1\n"), "{header}");

    let out = run(&["simulate", file.to_str().unwrap(), "--grid", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown grid"), "{}", stderr(&out));
}

#[test]
fn verify_via_named_grid_and_csv_import_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flow.csv");
    let file = systems_dir().join("inverse_q.json");
    let out = run(&[
        "simulate",
        file.to_str().unwrap(),
        "--grid",
        "flow",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let by_name = run(&[
        "verify",
        file.to_str().unwrap(),
        "--candidate",
        "boost",
        "--grid",
        "flow",
    ]);
    assert_eq!(
        by_name.status.code(),
        Some(0),
        "stderr: {}",
        stderr(&by_name)
    );
    assert!(stdout(&by_name).contains("verdict: PASS"));

    let by_csv = run(&[
        "verify",
        file.to_str().unwrap(),
        "--candidate",
        "boost",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(by_csv.status.code(), Some(0), "stderr: {}", stderr(&by_csv));
    assert!(stdout(&by_csv).contains("verdict: PASS"));
}

#[test]
fn verify_with_tight_tolerance_fails_with_exit_two() {
    let file = systems_dir().join("inverse_q.json");
    let out = run(&[
        "verify",
        file.to_str().unwrap(),
        "--candidate",
        "boost",
        "--grid",
        "flow",
        "--tol",
        "1e-16",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verdict: FAIL"));
}

#[test]
fn csv_schema_mismatch_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("wrong.csv");
    std::fs::write(&csv, "t_1,q_1,p_2_1\n0,1,2\n0.1,1,2\n").unwrap();
    let file = systems_dir().join("inverse_q.json");
    let out = run(&[
        "verify",
        file.to_str().unwrap(),
        "--candidate",
        "boost",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("header mismatch"), "{}", stderr(&out));
}

#[test]
fn ksym_seed_env_var_changes_the_reported_seed() {
    let file = systems_dir().join("laplace.json");
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let out = ksym()
        .args([
            "classify",
            file.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
        ])
        .env("KSYM_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(&json).unwrap();
    assert!(report.contains("\"seed\": 42"), "{report}");

    let out = ksym()
        .args(["classify", file.to_str().unwrap()])
        .env("KSYM_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_integrable_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noncommuting.json");
    // H chosen so the particular field has a non-vanishing bracket:
    // X_1 = p^1 q ∂/∂q + ..., X_2 = p^2 ∂/∂q + ...
    std::fs::write(
        &path,
        r#"{
  "n": 1,
  "k": 2,
  "hamiltonian": "p_1_1*p_2_1*q_1",
  "grids": {
    "sweep": {
      "origin": [0.0, 0.0],
      "spacing": [0.01, 0.01],
      "counts": [51, 51],
      "start": { "q_1": 1.0, "p_1_1": 1.0, "p_2_1": 1.0 }
    }
  }
}"#,
    )
    .unwrap();
    let out = run(&["simulate", path.to_str().unwrap(), "--grid", "sweep"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("not integrable"), "{}", stderr(&out));
}
