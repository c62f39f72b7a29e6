use std::process::{Command, Output};

use serde_json::{json, Value};

fn qctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qctl")).args(args).output().unwrap()
}

fn with_config(cmd: &str, cfg: Value, extra: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    qctl(&args)
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn derive_table1_csv() {
    let out = with_config("derive", json!({"case": "table1"}), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("section,item,"));
    let rows = rows(&out);
    let f = rows.iter().find(|r| r[0] == "frequency" && r[1] == "inaccuracy").unwrap();
    let v: f64 = f[2].parse().unwrap();
    assert!((v / 11e3 - 1.0).abs() < 0.1, "{v}");
    assert!(f.iter().any(|c| c == "onequbit.freq_inaccuracy"));
}

#[test]
fn json_envelope() {
    let out = with_config("derive", json!({"case": "table3", "format": "json"}), &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tool"], "qctl");
    assert_eq!(v["command"], "derive");
    assert_eq!(v["rows"][0].as_array().unwrap().len(), v["columns"].as_array().unwrap().len());
}

#[test]
fn filters_dc_limit() {
    let out = with_config("filters", json!({"thetas_rad": [std::f64::consts::PI], "omega_over_omega_r": [1e-6]}), &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    let amp: f64 = rows[0][2].parse().unwrap();
    assert!((amp - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-6, "{rows:?}");
}

#[test]
fn fdma_min_spacing() {
    let out = with_config("fdma", json!({"alphas": [10.0], "target_fidelity": 0.999}), &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3.16227"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(with_config("derive", json!({"case": "table5", "overrides": {"nope": 1}}), &[]).status.code(), Some(2));
    assert_eq!(with_config("derive", json!({"bogus": true}), &[]).status.code(), Some(2));
    assert_eq!(with_config("single-gate", json!({"monte_carlo_draws": 100, "phase_sigma_rad": 0.01}), &[]).status.code(), Some(2));
    let num = with_config("derive", json!({"case": "table5", "overrides": {"target_fidelity": 1e-9}}), &[]);
    assert_eq!(num.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&num.stderr).contains("numerical"));
}

#[test]
fn flag_overrides_config() {
    let out = with_config("derive", json!({"case": "table1", "format": "json"}), &["--format", "csv"]);
    assert!(out.stdout.starts_with(b"section,"));
}

#[test]
fn writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = with_config("rwa-sweep", json!({"ratios": [100.0]}), &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().lines().count() >= 2);
}

#[test]
fn seeded_monte_carlo_repeats() {
    let cfg = json!({"phase_sigma_rad": 0.05, "monte_carlo_draws": 3000});
    let a = with_config("single-gate", cfg.clone(), &["--seed", "5"]);
    let b = with_config("single-gate", cfg.clone(), &["--seed", "5"]);
    let c = with_config("single-gate", cfg, &["--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
