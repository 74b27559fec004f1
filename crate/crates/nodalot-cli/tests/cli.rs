//! End-to-end tests of the `nodalot` binary: spec'd example invocations,
//! exit codes, stdin plumbing, determinism, and the CSV sweep.

use std::io::Write as _;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_nodalot");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawning the binary")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawning the binary");
    child.stdin.as_mut().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().expect("waiting for the binary")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout JSON")
}

fn stderr_error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr JSON");
    v["error"]["kind"].as_str().expect("error.kind").to_owned()
}

/// A balanced interval function that is a member of X(1, 1, 1, [0,2])
/// but not step-structured (a half-height plateau).
const ROUGH_MEMBER: &str = r#"{
    "domain": {"kind": "interval", "length": 2.0},
    "pieces": [[0, 0.0, 0.5, 1.0], [0, 0.5, 1.5, 0.5], [0, 1.5, 2.0, -2.0]]
}"#;

/// The packed two-step minimizer on [0,1]: W_1 = 1/4, W_2 = 2^{-3/2}.
const PACKED: &str = r#"{
    "domain": {"kind": "interval", "length": 1.0},
    "pieces": [[0, 0.0, 0.5, 1.0], [0, 0.5, 1.0, -1.0]]
}"#;

#[test]
fn minimize_interval_example() {
    let out = run(&[
        "minimize", "--domain", "interval", "--length", "1", "--cinf", "1", "--c1", "1",
        "--n", "1", "--p", "1",
    ]);
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(v["case"], "interval");
    assert_eq!(v["effective_n"].as_f64().unwrap(), 1.0);
}

#[test]
fn minimize_star_example() {
    let out = run(&[
        "minimize", "--domain", "star", "--edges", "2,2,2,2", "--cinf", "1", "--c1", "1",
        "--n", "1", "--p", "1",
    ]);
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.125).abs() < 1e-15);
    assert_eq!(v["effective_n"].as_f64().unwrap(), 2.0);
    assert_eq!(v["case"], "star_even");
}

#[test]
fn minimize_circle_odd_parity_exits_2() {
    let out = run(&["minimize", "--domain", "circle", "--cinf", "1", "--c1", "1", "--n", "3",
        "--p", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "parity");
}

#[test]
fn minimize_star_without_edges_exits_2() {
    let out =
        run(&["minimize", "--domain", "star", "--cinf", "1", "--c1", "1", "--n", "1", "--p", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "invalid_input");
}

#[test]
fn missing_required_flag_exits_2() {
    let out = run(&["minimize", "--domain", "interval", "--length", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wasserstein_reads_stdin() {
    let out = run_with_stdin(&["wasserstein", "--p", "2"], PACKED);
    let v = stdout_json(&out);
    let expected = 0.25f64.sqrt() * 0.5f64.sqrt(); // 2^{-3/2}
    assert!((v["value"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(v["plan"]["moves"].as_array().unwrap().len(), 1);
}

#[test]
fn wasserstein_rejects_malformed_json() {
    let out = run_with_stdin(&["wasserstein", "--p", "1"], "not json");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "invalid_input");
}

#[test]
fn oracle_certifies_the_packed_value() {
    let out = run_with_stdin(&["oracle", "--p", "1", "--h", "0.001"], PACKED);
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 3e-3);
    assert!(v["max_dual_violation"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["atoms_plus"].as_u64().unwrap(), 500);
    assert_eq!(v["atoms_minus"].as_u64().unwrap(), 500);
}

#[test]
fn reduce_strictly_improves_a_rough_member() {
    let out = run_with_stdin(&["reduce", "--p", "1"], ROUGH_MEMBER);
    let v = stdout_json(&out);
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps[0]["kind"], "concentrate");
    let before = steps[0]["cost_before"].as_f64().unwrap();
    let after = steps[0]["cost_after"].as_f64().unwrap();
    assert!(after < before, "concentration should strictly improve: {before} -> {after}");
}

#[test]
fn verify_is_deterministic_across_runs_and_thread_caps() {
    let args =
        ["verify", "--trials", "6", "--seed", "3", "--domain-kinds", "interval,circle"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let one = Command::new(BIN)
        .args(args)
        .env("NODALOT_THREADS", "1")
        .output()
        .unwrap();
    let two = Command::new(BIN)
        .args(args)
        .env("NODALOT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(one.stdout, a.stdout);
    assert_eq!(two.stdout, a.stdout);
}

#[test]
fn verify_zero_trials_passes_trivially() {
    let out = run(&["verify", "--trials", "0", "--seed", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["total_failures"].as_u64().unwrap(), 0);
}

#[test]
fn verify_rejects_unknown_check_names() {
    let out = run(&["verify", "--trials", "1", "--checks", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "invalid_input");
}

#[test]
fn sweep_beta_endpoints_and_monotonicity() {
    let out = run(&["sweep-beta", "--n", "1", "--points", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "beta,short_edge_value,odd_long_edge_value,interval_value"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    // Endpoints: the interval value at beta = 0, the three-edge long-edge
    // value at beta* = 1/4.
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][1], 0.25);
    assert_eq!(rows[4][0], 0.25);
    assert_eq!(rows[4][1], 0.1875);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "short-edge column must strictly decrease");
    }
    // Constant columns.
    for r in &rows {
        assert_eq!(r[2], 0.1875);
        assert_eq!(r[3], 0.25);
    }
}

#[test]
fn sweep_beta_rejects_degenerate_parameters() {
    let out = run(&["sweep-beta", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep-beta", "--n", "1", "--points", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_thread_cap_exits_2() {
    let out = Command::new(BIN)
        .args(["verify", "--trials", "0"])
        .env("NODALOT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "invalid_input");
}
