//! End-to-end runs of the `qloop` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qloop"));
    cmd.args(args).env_remove("QLOOP_MEMORY_MIB");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn qloop")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn rows_without_timing(v: &Value) -> Vec<Value> {
    v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.as_object_mut().unwrap().remove("wall_ms");
            r
        })
        .collect()
}

#[test]
fn relations_pass_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"algebra": "A2", "suite": "relations"}"#);
    let out_dir = tmp.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out_dir);
    assert_eq!(r["pass"], Value::Bool(true));
    assert!(r["rows"].as_array().unwrap().iter().any(|row| row["anchor"] == "djra"));
}

#[test]
fn tightened_tolerance_fails_with_identical_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let loose = write_config(tmp.path(), "a.json", r#"{"algebra": "A1", "suite": "rmatrix", "samples": 4}"#);
    let tight = write_config(
        tmp.path(),
        "b.json",
        r#"{"algebra": "A1", "suite": "rmatrix", "samples": 4, "tolerances": {"rmatrix": 1e-30}}"#,
    );
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run(&["verify", "--config", &loose, "--out", da.to_str().unwrap()], &[]);
    let ob = run(&["verify", "--config", &tight, "--out", db.to_str().unwrap()], &[]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(1));
    let (ra, rb) = (report(&da), report(&db));
    let (ra, rb) = (ra["rows"].as_array().unwrap(), rb["rows"].as_array().unwrap());
    assert_eq!(ra.len(), rb.len());
    for (a, b) in ra.iter().zip(rb) {
        assert_eq!(a["residual"], b["residual"]);
    }
}

#[test]
fn malformed_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"algebra": "A1", "sweet": "all"}"#);
    let o = run(&["verify", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweet"));
    let o = run(&["verify", "--config", tmp.path().join("missing.json").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write_config(tmp.path(), "d.json", r#"{"algebra": "A1", "tolerances": {"rmatrix": -1}}"#);
    assert_eq!(run(&["verify", "--config", &bad], &[]).status.code(), Some(2));
}

#[test]
fn exceeding_memory_budget_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"algebra": "A2", "suite": "rqkz", "lattice": {"vertical_n": [3], "trotter_n": [2, 4]}}"#,
    );
    let out_dir = tmp.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[("QLOOP_MEMORY_MIB", "1")]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(report(&out_dir)["budget_exceeded"], Value::Bool(true));
}

#[test]
fn same_seed_reproduces_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"algebra": "A1", "suite": "rmatrix", "samples": 3}"#);
    let (da, db, dc) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (d, seed) in [(&da, "11"), (&db, "11"), (&dc, "12")] {
        run(&["verify", "--config", &cfg, "--seed", seed, "--out", d.to_str().unwrap()], &[]);
    }
    let (a, b, c) = (report(&da), report(&db), report(&dc));
    assert_eq!(rows_without_timing(&a), rows_without_timing(&b));
    assert_ne!(rows_without_timing(&a), rows_without_timing(&c));
    assert_eq!(a["seed"], 11);
}

#[test]
fn rqkz_suite_emits_convergence_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"algebra": "A1", "suite": "rqkz", "lattice": {"vertical_n": [1], "kappa": [0.05], "alpha": [0.1]}}"#,
    );
    let out_dir = tmp.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let csv = std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,error,ratio");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].ends_with(','));
    let r = report(&out_dir);
    assert!(r["rows"].as_array().unwrap().iter().any(|row| row["anchor"] == "andnf" && row["pass"] == true));
}

#[test]
fn convergence_command_prints_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"algebra": "A1", "lattice": {"trotter_n": [2, 4, 8]}}"#);
    let out_dir = tmp.path().join("out");
    let o = run(&["convergence", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("N,error,ratio"));
    let errors: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    assert!(out_dir.join("convergence.json").exists());
}
