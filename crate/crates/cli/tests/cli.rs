use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kdv-vessel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const GRID: &str = r#""grid": {"x_min": -2.0, "x_max": 2.0, "nx": 9, "t_min": 0.0, "t_max": 0.4, "nt": 9}"#;

#[test]
fn soliton_flags_emit_field_csv() {
    let out = run(&["soliton", "--k", "1", "--b-abs", "1.5", "--grid", "-4,4,17,-0.5,0.5,9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,tau,beta,q"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 17 * 9);
    assert!(!text.contains('\r'));
    for r in &rows {
        let (x, t, q) = (r[0], r[1], r[4]);
        let reference = kdv_vessel::one_soliton_reference(1.0, 1.5f64.powi(2) / 2.0, x, t);
        assert!((q - reference).abs() < 1e-10);
    }
    let first = text.lines().nth(1).unwrap();
    let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        &format!(
            r#"{{"vessel": {{"discrete": {{"k": [1.0, 2.0], "b_abs": [0.5, 0.25]}}}}, {GRID}, "transfer": {{"count": 3}}}}"#
        ),
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&[
            "transfer",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let c = run(&["transfer", "--config", &cfg, "--seed", "8"]);
    assert_ne!(c.stdout, a);
}

#[test]
fn negative_wavenumber_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &format!(r#"{{"vessel": {{"soliton": {{"k": [1.0, -2.0], "b_abs": [1.0, 1.0]}}}}, {GRID}}}"#),
    );
    let out = run(&["soliton", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vessel.soliton.k[1]"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &format!(r#"{{"vessel": {{"soliton": {{"k": [1.0], "b_abs": [1.0]}}}}, {GRID}, "colour": 1}}"#),
    );
    let out = run(&["soliton", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn pole_hit_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pole.json",
        &format!(
            r#"{{"vessel": {{"soliton": {{"k": [1.0], "b_abs": [1.0]}}}}, {GRID}, "transfer": {{"lambda": [[0.0, -1.0]]}}}}"#
        ),
    );
    let out = run(&["transfer", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_reports_each_check_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"checks": [{"name": "cauchy_determinant"}, {"name": "gelfand_levitan"}], "seed": 11}"#,
    );
    let report = dir.path().join("report.json");
    let out = run(&["verify", "--config", &cfg, "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["seed"], 11);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        for key in ["check", "value", "tolerance", "pass", "runtime_ms"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn failing_check_exits_one_and_override_can_relax_it() {
    let out = run(&["verify", "--check", "periodicity", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,value,tolerance,pass,runtime_ms\nperiodicity,"));
    assert!(text.contains(",false,"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.json",
        r#"{"checks": [{"name": "periodicity", "tolerance": 100.0}]}"#,
    );
    let out = run(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_check_name_is_a_config_error() {
    assert_eq!(run(&["verify", "--check", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn spectral_evolve_and_scatter_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spectral = write_config(
        dir.path(),
        "s.json",
        &format!(
            r#"{{"vessel": {{"quadrature": {{"s_max": 3.0, "nodes": 16, "density": {{"gaussian": {{"amplitude": 0.3, "width": 1.0}}}}}}}}, {GRID}, "output": {{"format": "json"}}}}"#
        ),
    );
    let out = run(&["spectral", "--config", &spectral]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 81);
    assert!(rows[0]["q"].is_number());

    let evolve = write_config(
        dir.path(),
        "e.json",
        r#"{"vessel": {"evolution": {"k0": 1.0, "M": 2, "p0": [0.1, 0.2, 0.2, 0.1], "t_end": 0.1, "steps": 10}}}"#,
    );
    let out = run(&["evolve", "--config", &evolve]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,k,p\n"));
    assert_eq!(text.lines().count(), 1 + 11 * 4);

    let scatter = write_config(
        dir.path(),
        "g.json",
        &format!(
            r#"{{"vessel": {{"soliton": {{"k": [1.0], "b_abs": [1.4142135623730951]}}}}, {GRID}, "scatter": {{"x0": -2.0, "nodes": 101}}}}"#
        ),
    );
    let out = run(&["scatter", "--config", &scatter]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,y,t,omega_re,omega_im,k_re,k_im,gl_residual\n"));
    assert_eq!(text.lines().count(), 1 + 9 * 10 / 2);
}

#[test]
fn quick_suite_lists_every_check() {
    let out = run(&["suite", "--level", "quick", "--format", "csv", "--threads", "2"]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 13);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.matches("PASS").count() + stderr.matches("FAIL").count(), 12);
}
