//! End-to-end tests of the `bos` binary: exit codes, artifact layout,
//! machine-readable error objects, config-file merging, and byte-level
//! determinism of the generated reports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bos"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("failed to launch bos")
}

fn write_rhs(path: &Path, points: usize) {
    let mut csv = String::from("x,re,im\n");
    for j in 0..points {
        let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / points as f64;
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e}\n",
            x,
            1.0 + 0.5 * (2.0 * x).cos(),
            0.3 * x.sin()
        ));
    }
    fs::write(path, csv).unwrap();
}

#[test]
fn factor_check_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &["factor-check", "--a", "0.3", "--b", "1.0", "--n", "32"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("check PASS : factorization_residual"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("factor-check_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "factor-check");
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn regime_violation_exits_two_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &["assemble", "--a", "0.5", "--b", "1.5", "--n", "8", "--kind", "L"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr must be a JSON error object");
    assert_eq!(err["error"]["kind"], "regime-violation");
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn missing_required_option_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(dir.path(), &["factor-check", "--a", "0.3", "--n", "16"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid-config");
}

#[test]
fn empty_verify_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(dir.path(), &["verify-all", "--grid", " ; "]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn polluted_spectrum_fails_imaginary_check_but_writes_all_rows() {
    // At a = 0 the ten smallest eigenvalues of the truncated block include
    // spurious complex quartets, so the imaginary-axis check honestly fails
    // (exit 1) while the CSV still records every eigenvalue with its
    // convergence flag.
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &["spectrum", "--a", "0", "--b", "1", "--n", "32", "--k", "10"],
    );
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("spec.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "re,im,converged,stability");
    assert_eq!(rows.len(), 11);
    assert!(rows[1..].iter().any(|r| r.split(',').nth(2) == Some("0")));
}

#[test]
fn spectrum_core_passes_in_unperturbed_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &["spectrum", "--a", "0", "--b", "1", "--n", "32", "--k", "4"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn minverse_fourier_solves_sampled_rhs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    write_rhs(&input, 64);
    let out = bos(
        dir.path(),
        &[
            "minverse",
            "--a",
            "0.3",
            "--b",
            "1.0",
            "--input",
            input.to_str().unwrap(),
            "--method",
            "fourier",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let y = fs::read_to_string(dir.path().join("y.csv")).unwrap();
    assert_eq!(y.lines().count(), 65); // header + one row per input node
    assert!(y.starts_with("x,re,im"));
}

#[test]
fn config_file_fills_flags_left_unset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "a = 0.3 # perturbation\nb = 1.0\nn = 16\nseed = 11\n").unwrap();
    let out = bos(
        dir.path(),
        &["factor-check", "--config", cfg.to_str().unwrap(), "--n", "24"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("factor-check_report.json")).unwrap())
            .unwrap();
    // Flag overrides the file, file fills the rest.
    assert_eq!(report["config"]["n"], "24");
    assert_eq!(report["config"]["a"], "0.3");
    assert_eq!(report["seed"], 11);
}

#[test]
fn same_seed_yields_identical_report_bytes() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bos(
            dir.path(),
            &["factor-check", "--a", "0.2", "--b", "1.2", "--n", "16", "--seed", "7"],
        );
        assert!(out.status.success());
        fs::read(dir.path().join("factor-check_report.json")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn evolve_preset_mode_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &[
            "evolve", "--a", "0.3", "--b", "0.2", "--n", "16", "--dt", "0.01",
            "--tmax", "0.5", "--init", "preset:mode:1", "--scheme", "rk4",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,l2,h1,blowup_flag"));
    assert_eq!(trace.lines().count(), 52); // header + 51 recorded steps
}

#[test]
fn growth_monotonicity_check_present_only_in_unperturbed_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = bos(
        dir.path(),
        &["growth", "--a", "0", "--b", "1", "--n-list", "8,16", "--t-grid", "0:1:0.5"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("envelope_max_nondecreasing"));

    let dir2 = tempfile::tempdir().unwrap();
    let out2 = bos(
        dir2.path(),
        &["growth", "--a", "0.3", "--b", "1", "--n-list", "8,16", "--t-grid", "0:1:0.5"],
    );
    assert!(out2.status.success());
    assert!(!String::from_utf8_lossy(&out2.stdout).contains("envelope_max_nondecreasing"));
}
