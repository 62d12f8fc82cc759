//! End-to-end tests of the `mimocap` binary: output contracts, exit codes,
//! determinism, and the solve -> check round trip.

use std::path::Path;
use std::process::{Command, Output};

fn mimocap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimocap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const LOW_SNR_SCENARIO: &str = r#"{
    "label": "low-snr",
    "gram": [[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
    "p_total": 0.015,
    "p_antenna": 0.01,
    "regime": "joint"
}"#;

const FIG1_SCENARIO: &str = r#"{
    "label": "fig1",
    "gram": [[[1.0, 0.0], [0.1, 0.0]], [[0.1, 0.0], [0.2, 0.0]]],
    "p_total": 4.0,
    "p_antenna": 3.0,
    "regime": "joint"
}"#;

const RANK_DEFICIENT_SCENARIO: &str = r#"{
    "gram": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
    "p_total": 2.0,
    "p_antenna": 1.0,
    "regime": "joint"
}"#;

#[test]
fn solve_prints_low_snr_example() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let out = mimocap(&["solve", scenario.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("2.47901688"),
        "capacity line missing:\n{stdout}"
    );
    assert!(stdout.contains("closed-form joint"));
    assert!(stdout.contains("KKT: pass"));
}

#[test]
fn solve_oracle_path_reports_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, RANK_DEFICIENT_SCENARIO);
    let out = mimocap(&["solve", scenario.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let capacity = value["capacity_nats"].as_f64().unwrap();
    assert!((capacity - 2.0_f64.ln()).abs() <= 1e-6);
    assert_eq!(value["provenance"], "numerical oracle");
}

#[test]
fn solve_bits_flag_rescales_display() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let out = mimocap(&["solve", scenario.to_str().unwrap(), "--json", "--bits"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let nats = value["capacity_nats"].as_f64().unwrap();
    let bits = value["capacity_bits"].as_f64().unwrap();
    assert!((bits - nats / std::f64::consts::LN_2).abs() <= 1e-15);
}

#[test]
fn solve_regime_override() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, FIG1_SCENARIO);
    let joint = mimocap(&["solve", scenario.to_str().unwrap(), "--json"]);
    let tpc = mimocap(&[
        "solve",
        scenario.to_str().unwrap(),
        "--json",
        "--regime",
        "tpc",
    ]);
    assert!(joint.status.success() && tpc.status.success());
    let joint: serde_json::Value = serde_json::from_slice(&joint.stdout).unwrap();
    let tpc: serde_json::Value = serde_json::from_slice(&tpc.stdout).unwrap();
    let c_joint = joint["capacity_nats"].as_f64().unwrap();
    let c_tpc = tpc["capacity_nats"].as_f64().unwrap();
    assert!(
        c_joint < c_tpc,
        "joint {c_joint} must be below tpc {c_tpc} here"
    );
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let a = mimocap(&["solve", scenario.to_str().unwrap()]);
    let b = mimocap(&["solve", scenario.to_str().unwrap()]);
    assert_eq!(
        a.stdout, b.stdout,
        "closed-form output must be byte-identical"
    );

    let scenario2 = dir.path().join("s2.json");
    write(&scenario2, RANK_DEFICIENT_SCENARIO);
    let a = mimocap(&["solve", scenario2.to_str().unwrap(), "--json"]);
    let b = mimocap(&["solve", scenario2.to_str().unwrap(), "--json"]);
    assert_eq!(
        a.stdout, b.stdout,
        "fixed-seed oracle output must be byte-identical"
    );
}

#[test]
fn solve_missing_field_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(
        &scenario,
        r#"{"gram": [[[1.0, 0.0]]], "p_antenna": 1.0, "regime": "joint"}"#,
    );
    let out = mimocap(&["solve", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("p_total"),
        "stderr must name the field:\n{stderr}"
    );
}

#[test]
fn check_round_trip_passes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let solved = mimocap(&["solve", scenario.to_str().unwrap(), "--json"]);
    assert!(solved.status.success());
    let value: serde_json::Value = serde_json::from_slice(&solved.stdout).unwrap();
    let cov = dir.path().join("r.json");
    write(&cov, &serde_json::to_string(&value["r"]).unwrap());

    let checked = mimocap(&[
        "check",
        scenario.to_str().unwrap(),
        "--cov",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(checked.status.code(), Some(0), "round trip must pass KKT");
    let report: serde_json::Value = serde_json::from_slice(&checked.stdout).unwrap();
    assert_eq!(report["kkt"]["pass"], true);
}

#[test]
fn check_zero_covariance_fails_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let cov = dir.path().join("zero.json");
    write(&cov, "[[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]");
    let out = mimocap(&[
        "check",
        scenario.to_str().unwrap(),
        "--cov",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_non_hermitian_covariance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let cov = dir.path().join("bad.json");
    write(&cov, "[[[1.0, 0.0], [0.5, 0.0]], [[0.2, 0.0], [1.0, 0.0]]]");
    let out = mimocap(&[
        "check",
        scenario.to_str().unwrap(),
        "--cov",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, LOW_SNR_SCENARIO);
    let cov = dir.path().join("wrong.json");
    write(&cov, "[[[1.0, 0.0]]]");
    let out = mimocap(&[
        "check",
        scenario.to_str().unwrap(),
        "--cov",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, FIG1_SCENARIO);
    let args = [
        "sweep",
        scenario.to_str().unwrap(),
        "--ptmin",
        "0.5",
        "--ptmax",
        "10",
        "--steps",
        "20",
    ];
    let a = mimocap(&args);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "p_total,c_tpc,c_pac,c_joint,c_iso,tpc_active,pac_all_inactive"
    );
    assert_eq!(lines.len(), 21, "header plus 20 rows");
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[0], "0.5");
    // PAC-only capacity is constant across rows.
    let pac: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert!(pac.iter().all(|&p| p == pac[0]));

    // Determinism: a second run is byte-identical.
    let b = mimocap(&args);
    assert_eq!(a.stdout, b.stdout);

    // --out writes the same bytes to a file.
    let csv = dir.path().join("sweep.csv");
    let mut with_out = args.to_vec();
    with_out.push("--out");
    with_out.push(csv.to_str().unwrap());
    let c = mimocap(&with_out);
    assert!(c.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), a.stdout);
}

#[test]
fn sweep_rejects_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write(&scenario, FIG1_SCENARIO);
    let out = mimocap(&[
        "sweep",
        scenario.to_str().unwrap(),
        "--ptmin",
        "5",
        "--ptmax",
        "1",
        "--steps",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
