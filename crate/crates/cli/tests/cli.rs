//! End-to-end tests of the command-line surface: JSON report schema, exit
//! codes, and agreement with direct library calls.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sicframes"))
}

fn run(args: &[&str]) -> (Output, Value) {
    let output = bin().args(args).output().expect("binary runs");
    let report: Value = serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is JSON ({e}): {:?}",
            String::from_utf8_lossy(&output.stdout)
        )
    });
    (output, report)
}

fn schema_keys(report: &Value) {
    for key in [
        "command",
        "inputs",
        "residuals",
        "pass",
        "details",
        "error",
        "timing_ms",
    ] {
        assert!(report.get(key).is_some(), "missing key {key} in {report}");
    }
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("sicframes-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn find_verify_roundtrip_matches_library() {
    let fid_path = temp_path("cli-n3.txt");
    let (out, report) = run(&[
        "find-fiducial",
        "--n",
        "3",
        "--seed",
        "0",
        "--restarts",
        "4",
        "--out",
        fid_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{report}");
    schema_keys(&report);
    assert_eq!(report["pass"], Value::Bool(true));

    let (out, report) = run(&["verify-sic", "--fiducial", fid_path.to_str().unwrap()]);
    assert!(out.status.success());
    schema_keys(&report);
    assert_eq!(report["command"], "verify-sic");

    // The CLI is a thin adapter: its residuals are the library's values
    // (compared to a few ulps, since the binary is a separate compilation).
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    let loaded = sicframes::fidsearch::load_fiducial(&fid_path).unwrap();
    let lib_report = sicframes::sicalign::verify_sic(&loaded.fiducial, 1e-8);
    let cli_dev = report["residuals"]["max_overlap_deviation"]
        .as_f64()
        .unwrap();
    assert!(close(cli_dev, lib_report.max_overlap_deviation));
    let cli_res = report["residuals"]["resolution_residual"].as_f64().unwrap();
    assert!(close(cli_res, lib_report.resolution_residual));
}

#[test]
fn parity_audit_reports_eight_cases_for_n4() {
    let (out, report) = run(&["parity-audit", "--n", "4"]);
    assert!(out.status.success());
    schema_keys(&report);
    assert_eq!(report["details"]["cases"].as_array().unwrap().len(), 8);
    assert_eq!(report["pass"], Value::Bool(true));

    let (out, report) = run(&["parity-audit", "--n", "5"]);
    assert!(out.status.success());
    assert_eq!(report["details"]["cases"].as_array().unwrap().len(), 1);
}

#[test]
fn alignment_failure_exits_one_with_stable_schema() {
    // An unconstrained n = 8 SIC from a seed known to land off the aligned
    // phase pattern.
    let fid_path = temp_path("cli-n8-unaligned.txt");
    let (out, _) = run(&[
        "find-fiducial",
        "--n",
        "8",
        "--seed",
        "17",
        "--restarts",
        "1",
        "--out",
        fid_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let (out, report) = run(&[
        "check-alignment",
        "--fiducial",
        fid_path.to_str().unwrap(),
        "--d",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1), "{report}");
    schema_keys(&report);
    assert_eq!(report["pass"], Value::Bool(false));
    assert!(
        report["residuals"]["condition1_max_residual"]
            .as_f64()
            .unwrap()
            > 1e-3
    );

    let (out, report) = run(&[
        "pi-ranks",
        "--fiducial",
        fid_path.to_str().unwrap(),
        "--d",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    schema_keys(&report);
    assert_eq!(report["pass"], Value::Bool(false));
}

#[test]
fn usage_errors_exit_two() {
    // Unknown verb.
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Unknown option.
    let out = bin().args(["verify-sic", "--bogus", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Missing file.
    let (out, report) = run(&["verify-sic", "--fiducial", "/nonexistent/f.txt"]);
    assert_eq!(out.status.code(), Some(2));
    schema_keys(&report);
    assert!(report["error"].as_str().is_some());
    // Malformed file.
    let bad = temp_path("bad.txt");
    std::fs::write(&bad, "2\n1.0 0.0\noops\n").unwrap();
    let (out, report) = run(&["verify-sic", "--fiducial", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report["error"].as_str().unwrap().contains("line"));
    // Alignment with inconsistent n and d.
    let (out, _) = run(&["find-fiducial", "--n", "9", "--d", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_emits_matrices() {
    let (out, report) = run(&["gen", "--n", "2", "--op", "pauli-x"]);
    assert!(out.status.success());
    schema_keys(&report);
    let m = report["details"]["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m[0][1][0].as_f64().unwrap(), 1.0);
    assert_eq!(m[0][0][0].as_f64().unwrap(), 0.0);

    let (out, report) = run(&["gen", "--op", "symmetry-unitary", "--d", "4"]);
    assert!(out.status.success());
    assert!(report["residuals"]["unitarity_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(report["details"]["matrix"].as_array().unwrap().len(), 8);
}

#[test]
fn decomp_audit_passes_for_small_cases() {
    let (out, report) = run(&[
        "decomp-audit",
        "--n",
        "8",
        "--n1",
        "3",
        "--n2",
        "4",
        "--d",
        "4",
    ]);
    assert!(out.status.success(), "{report}");
    schema_keys(&report);
    for key in [
        "intertwiner_x",
        "intertwiner_z",
        "even_block_deviation",
        "off_block_leakage",
        "splitting_max",
        "twirl_max",
        "subspace_first_family",
        "subspace_second_family",
    ] {
        assert!(
            report["residuals"][key].as_f64().unwrap() < 1e-11,
            "{key}: {}",
            report["residuals"][key]
        );
    }
}

#[test]
fn aligned_pipeline_through_cli() {
    let fid_path = temp_path("cli-n8-aligned.txt");
    let (out, report) = run(&[
        "find-fiducial",
        "--n",
        "8",
        "--d",
        "4",
        "--out",
        fid_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{report}");
    assert!(report["residuals"]["alignment_penalty"].as_f64().unwrap() < 1e-10);

    let path = fid_path.to_str().unwrap();
    for args in [
        vec!["check-alignment", "--fiducial", path, "--d", "4"],
        vec!["pi-ranks", "--fiducial", path, "--d", "4"],
        vec!["extract-frames", "--fiducial", path, "--d", "4"],
        vec!["verify-symmetry", "--fiducial", path, "--d", "4"],
    ] {
        let (out, report) = run(&args);
        assert!(out.status.success(), "{}: {report}", args[0]);
        schema_keys(&report);
        assert_eq!(report["pass"], Value::Bool(true), "{}", args[0]);
    }
}
