//! End-to-end tests of the `ptsb` binary: output schemas, determinism,
//! config handling and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ptsb"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ptsb-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bath_dump_is_full_precision() {
    let dir = temp_dir("bath");
    let out = bin()
        .args([
            "bath",
            "--scheme",
            "wilson",
            "--modes",
            "2",
            "--lambda",
            "0.1",
            "--basename",
            "w",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_success(&out);
    let csv = fs::read_to_string(dir.join("w.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,omega,g"));
    let first = lines.next().unwrap();
    // ω_1 and g_1 of the Λ = 1.2 logarithmic scheme at λ = 0.1.
    assert_eq!(
        first,
        "1,7.6599326599326611e-1,7.2833947789593859e-2"
    );
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("w.json")).unwrap()).unwrap();
    assert_eq!(sidecar["scheme"], "wilson");
    assert_eq!(sidecar["cutoff"], "hard");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn spectrum_output_is_deterministic() {
    let run = |dir: &PathBuf| {
        let out = bin()
            .args([
                "spectrum",
                "--axis",
                "eps",
                "--grid-min",
                "0",
                "--grid-max",
                "0.5",
                "--grid-count",
                "6",
                "--delta",
                "0.3",
                "--lambda",
                "0",
                "--modes",
                "4",
                "--workers",
                "1",
                "--basename",
                "s",
            ])
            .arg("--out")
            .arg(dir)
            .output()
            .unwrap();
        assert_success(&out);
        fs::read(dir.join("s.csv")).unwrap()
    };
    let d1 = temp_dir("det1");
    let d2 = temp_dir("det2");
    let first = run(&d1);
    let second = run(&d2);
    assert_eq!(first, second, "CSV bodies must be byte-identical");

    let csv = String::from_utf8(first).unwrap();
    assert!(csv.starts_with("x,re_E,im_E,branch,residual,converged\n"));
    // λ = 0 qubit: one real branch below ε = Δ, a conjugate pair above.
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.iter().any(|r| r.ends_with(",1,0,true")
        || r.split(',').nth(3) == Some("1")));
    fs::remove_dir_all(&d1).unwrap();
    fs::remove_dir_all(&d2).unwrap();
}

#[test]
fn dynamics_schema_and_metadata() {
    let dir = temp_dir("dyn");
    let out = bin()
        .args([
            "dynamics",
            "--modes",
            "16",
            "--t-end",
            "5",
            "--stride",
            "1",
            "--basename",
            "d",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_success(&out);
    let csv = fs::read_to_string(dir.join("d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,s_z,n_b,log_norm,re_H_over_N,im_H_over_N,dnorm_residual")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    // Polarized-up initial state up to the r = 1e-8 regularization floor.
    assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(csv.lines().count(), 7); // header + samples at t = 0..5

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("d.json")).unwrap()).unwrap();
    assert!(sidecar["integrator"]["steps_accepted"].as_u64().unwrap() > 0);
    assert!(sidecar["recurrence_time"].as_f64().unwrap() > 5.0);
    assert_eq!(sidecar["reg_floor"].as_f64().unwrap(), 1e-8);
    assert_eq!(sidecar["config"]["model"]["delta"].as_f64().unwrap(), 0.1);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dynamics_preset_writes_one_file_per_eps() {
    let dir = temp_dir("pair");
    let out = bin()
        .args([
            "dynamics",
            "--preset",
            "fig3a",
            "--modes",
            "16",
            "--t-end",
            "2",
            "--stride",
            "1",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_success(&out);
    assert!(dir.join("fig3a_eps0.05.csv").exists());
    assert!(dir.join("fig3a_eps0.1.csv").exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validate_overlays_both_sources() {
    let dir = temp_dir("val");
    let out = bin()
        .args([
            "validate",
            "--case",
            "single",
            "--grid-min",
            "0",
            "--grid-max",
            "0.15",
            "--grid-count",
            "4",
            "--n-max",
            "12",
            "--basename",
            "v",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_success(&out);
    let csv = fs::read_to_string(dir.join("v.csv")).unwrap();
    assert!(csv.starts_with("lambda,re_E0,im_E0,re_E1,im_E1,source\n"));
    let ed = csv.lines().filter(|l| l.ends_with(",ed")).count();
    let proj = csv.lines().filter(|l| l.ends_with(",projection")).count();
    assert_eq!((ed, proj), (4, 4));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("v.json")).unwrap()).unwrap();
    assert!(sidecar["max_pt_defect"].as_f64().unwrap() <= 1e-12);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = temp_dir("cfg");
    let cfg_path = dir.join("run.cfg");
    fs::write(
        &cfg_path,
        "[model]\ndelta = 0.2\n\n[bath]\nscheme = wilson\nmodes = 4\n\n[spectrum]\naxis = eps\ngrid_max = 0.5\ngrid_count = 4\n",
    )
    .unwrap();
    let out = bin()
        .args(["spectrum", "--lambda", "0", "--basename", "c"])
        .arg("--config")
        .arg(&cfg_path)
        .args(["--grid-count", "5"]) // flag beats file
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_success(&out);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("c.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["model"]["delta"].as_f64().unwrap(), 0.2);
    assert_eq!(
        sidecar["config"]["spectrum"]["grid_count"].as_u64().unwrap(),
        5
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = temp_dir("badkey");
    let cfg_path = dir.join("bad.cfg");
    fs::write(&cfg_path, "[model]\ndelta = 0.2\nwibble = 3\n").unwrap();
    let out = bin()
        .args(["spectrum"])
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("wibble"), "stderr: {stderr}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_of_range_value_exits_2() {
    let out = bin()
        .args(["spectrum", "--lambda=-0.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

#[test]
fn unknown_preset_exits_2() {
    let out = bin()
        .args(["spectrum", "--preset", "fig9z"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_overrides_output_dir() {
    let dir = temp_dir("env");
    let out = bin()
        .args([
            "bath", "--scheme", "uniform", "--modes", "3", "--omega-max", "3", "--basename", "e",
        ])
        .env("PTSB_OUTDIR", &dir)
        .output()
        .unwrap();
    assert_success(&out);
    assert!(dir.join("e.csv").exists());
    let csv = fs::read_to_string(dir.join("e.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    fs::remove_dir_all(&dir).unwrap();
}
