//! End-to-end tests of the `starpulse` binary: exit codes, cache behavior,
//! artifact determinism, and the documented error messages.

use std::path::Path;
use std::process::{Command, Output};

fn starpulse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starpulse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn lane_emden_analytic_case_and_cache_hit() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "lane-emden",
        "--gamma",
        "2",
        "--cache-dir",
        "cache",
        "--out",
        "le.json",
    ];
    let first = starpulse(dir.path(), &args);
    assert!(first.status.success(), "{first:?}");
    let text = stdout(&first);
    assert!(text.contains("xi1=3.14159"), "{text}");
    assert!(text.contains("(computed)"));
    let bytes_first = std::fs::read(dir.path().join("le.json")).unwrap();

    let second = starpulse(dir.path(), &args);
    assert!(second.status.success());
    assert!(stdout(&second).contains("(cache hit)"));
    let bytes_second = std::fs::read(dir.path().join("le.json")).unwrap();
    assert_eq!(bytes_first, bytes_second, "cache hit must be bit-identical");

    let doc: serde_json::Value = serde_json::from_slice(&bytes_first).unwrap();
    assert_eq!(doc["schema"], 1);
    assert!((doc["xi1"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-10);
    assert!(doc["grid"].as_array().unwrap().len() > 10);
}

#[test]
fn invalid_gamma_exits_2_with_admissible_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpulse(dir.path(), &["lane-emden", "--gamma", "1.7"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2, 1.5, 1.333..., 1.25"), "{err}");
}

#[test]
fn fraction_gamma_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpulse(
        dir.path(),
        &["lane-emden", "--gamma", "4/3", "--cache-dir", "cache"],
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("xi1=6.89685"));
}

#[test]
fn modes_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "modes",
        "--gamma",
        "1.5",
        "--nodes",
        "40",
        "--count",
        "2",
        "--cache-dir",
        "cache",
        "--csv",
        "modes.csv",
        "--out",
        "modes.json",
    ];
    let first = starpulse(dir.path(), &args);
    assert!(first.status.success(), "{first:?}");
    assert!(stdout(&first).contains("n=1 lambda="));
    let a = std::fs::read(dir.path().join("modes.csv")).unwrap();
    let second = starpulse(dir.path(), &args);
    assert!(second.status.success());
    let b = std::fs::read(dir.path().join("modes.csv")).unwrap();
    assert_eq!(a, b);
    let header = String::from_utf8_lossy(&a);
    assert!(header.starts_with("n,lambda,lambda_phys,phi@x="));
}

#[test]
fn evolve_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpulse(
        dir.path(),
        &[
            "evolve",
            "--gamma",
            "1.5",
            "--nodes",
            "40",
            "--eps",
            "1e-4",
            "--mode",
            "1",
            "--periods",
            "1",
            "--dt-factor",
            "0.5",
            "--cache-dir",
            "cache",
            "--out",
            "traj.csv",
            "--csv-stride",
            "10",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,r_free,y_center,y_surface,energy");
    assert!(lines.count() > 10);
}

#[test]
fn cauchy_zero_data_stays_at_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = vec![0.0f64; 40];
    std::fs::write(
        dir.path().join("psi.json"),
        serde_json::to_vec(&zeros).unwrap(),
    )
    .unwrap();
    let out = starpulse(
        dir.path(),
        &[
            "cauchy",
            "--gamma",
            "1.5",
            "--nodes",
            "40",
            "--psi0",
            "psi.json",
            "--psi1",
            "psi.json",
            "--t-end",
            "2.0",
            "--cache-dir",
            "cache",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("final sup|y|=0"));
}

#[test]
fn cauchy_wrong_length_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("psi.json"), b"[0.0, 0.0]").unwrap();
    let out = starpulse(
        dir.path(),
        &[
            "cauchy",
            "--gamma",
            "1.5",
            "--nodes",
            "40",
            "--psi0",
            "psi.json",
            "--psi1",
            "psi.json",
            "--t-end",
            "1.0",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_single_experiment_writes_report_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpulse(
        dir.path(),
        &[
            "verify",
            "ritter",
            "--gamma",
            "1.5",
            "--nodes",
            "48",
            "--out",
            "reports",
            "--cache-dir",
            "cache",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("experiment ritter-eddington: PASS"));
    assert!(dir.path().join("reports/ritter-eddington.csv").exists());
    assert!(dir.path().join("reports/ritter-eddington.json").exists());
}

#[test]
fn verify_ritter_needs_oscillatory_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpulse(
        dir.path(),
        &["verify", "ritter", "--gamma", "1.25", "--out", "reports"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_sets_defaults_and_env_sets_cache() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "gamma=2\nnodes=40\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_starpulse"))
        .current_dir(dir.path())
        .env("STARPULSE_CACHE", "envcache")
        .args(["--config", "run.conf", "lane-emden"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("xi1=3.14159"));
    assert!(dir.path().join("envcache").is_dir());
}
