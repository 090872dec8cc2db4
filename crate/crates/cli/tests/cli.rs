use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"{"b": [1], "c": 1, "beta": 2, "model": {"kind": "fbm", "hurst": 0.5}}"#;

fn lab(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_extremes-lab"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn header() -> String {
    format!("# extremes-lab v{} schema=1", env!("CARGO_PKG_VERSION"))
}

#[test]
fn params_prints_derived_values() {
    let dir = tempfile::tempdir().unwrap();
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), &format!(r#"{{"spec": {SPEC}}}"#), &["params"]))).unwrap();
    for key in ["t0", "A", "B", "alpha", "Q"] {
        assert!(v[key].is_number(), "{key} missing in {v}");
    }
    assert_eq!(v["t0"].as_f64().unwrap(), 1.0);
}

#[test]
fn paths_csv_layout_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "fbm", "hurst": 0.3}, "grid_points": 9, "count": 3, "seed": 1}"#;
    let a = ok(&lab(dir.path(), cfg, &["paths", "--format", "csv"]));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], header());
    assert_eq!(lines[1], "t,y1,y2,y3");
    assert_eq!(lines.len(), 2 + 9);
    // at least 15 significant digits
    let mantissa = lines[5].split(',').nth(1).unwrap().split('e').next().unwrap();
    assert!(mantissa.chars().filter(|c| c.is_ascii_digit()).count() >= 15);
    let b = ok(&lab(dir.path(), cfg, &["paths", "--format", "csv", "--seed", "2"]));
    assert_ne!(a, b);
    let c = ok(&lab(dir.path(), cfg, &["paths", "--format", "csv", "--seed", "1"]));
    assert_eq!(a, c);
}

#[test]
fn constants_json_and_cache_file() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("constants_cache.json");
    let cfg = r#"{"kind": "pickands", "nu": 1, "policy": {"pickands_s": 4, "pickands_step": 0.02, "reps": 1000}}"#;
    let args = ["constants", "--cache", cache.to_str().unwrap()];
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), cfg, &args))).unwrap();
    for key in ["kind", "params", "value", "stderr", "method"] {
        assert!(!v[key].is_null(), "{key} missing");
    }
    assert_eq!(v["method"], "monte_carlo");
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&cache).unwrap()).unwrap();
    assert_eq!(stored["entries"].as_object().unwrap().len(), 1);
    let again: Value = serde_json::from_str(&ok(&lab(dir.path(), cfg, &args))).unwrap();
    assert_eq!(v, again);
}

#[test]
fn closed_form_constant() {
    let dir = tempfile::tempdir().unwrap();
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), r#"{"kind": "upsilon", "k": 2, "u": 4}"#, &["constants"]))).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), (-2.0f64).exp());
    assert_eq!(v["method"], "closed_form");
}

#[test]
fn asymptotic_factor_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"evaluator": "chi_sup", "b": [1, 1, 0.5], "u": 30,
                  "params": {"nu": 2, "mu": 2, "d": 1, "a": 1}}"#;
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), cfg, &["asymptotic"]))).unwrap();
    assert_eq!(v["evaluator"], "chi_sup");
    let f = &v["factors"];
    let product: f64 = ["constant_part", "weight_product", "power_part", "tail_part"]
        .iter()
        .map(|k| f[k].as_f64().unwrap())
        .product();
    let value = v["value"].as_f64().unwrap();
    assert!((product / value - 1.0).abs() < 1e-12);
}

#[test]
fn estimate_psi_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"spec": {SPEC}, "u": 4, "mc": {{"reps": 500, "grid_points": 101, "seed": 3}}}}"#);
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), &cfg, &["estimate-psi"]))).unwrap();
    for key in ["p_hat", "ci_low", "ci_high", "reps", "grid_points", "truncation_T", "seed", "wall_ms"] {
        assert!(v[key].is_number(), "{key} missing");
    }
    assert_eq!(v["seed"], 3);
    let csv = ok(&lab(dir.path(), &cfg, &["estimate-psi", "--format", "csv", "--seed", "4"]));
    assert_eq!(csv.lines().next().unwrap(), header());
    assert!(csv.lines().nth(2).unwrap().split(',').nth(6).unwrap() == "4");
}

#[test]
fn fpt_csv_single_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"spec": {SPEC}, "u": 2, "horizon": {{"type": "finite", "t": 1}}, "fpt": {{"samples": 20, "grid_points": 101}}}}"#
    );
    let csv = ok(&lab(dir.path(), &cfg, &["fpt", "--format", "csv"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], header());
    assert_eq!(lines[1], "tau");
    assert_eq!(lines.len(), 22);
    assert!(lines[2..].iter().all(|l| l.parse::<f64>().unwrap() <= 1.0));
    let v: Value = serde_json::from_str(&ok(&lab(dir.path(), &cfg, &["fpt"]))).unwrap();
    let ks = v["gof"]["ks_stat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ks));
}

#[test]
fn compare_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"spec": {SPEC}, "us": [4, 1], "mc": {{"reps": 400, "grid_points": 101, "seed": 5}}}}"#);
    let strip = |s: String| -> Value {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        for row in v["rows"].as_array_mut().unwrap() {
            row["mc"].as_object_mut().unwrap().remove("wall_ms");
        }
        v
    };
    let a = strip(ok(&lab(dir.path(), &cfg, &["compare", "--workers", "1"])));
    let b = strip(ok(&lab(dir.path(), &cfg, &["compare", "--workers", "2"])));
    assert_eq!(a, b);
    assert_eq!(a["rows"][0]["u"], 1.0);
    let out = dir.path().join("cmp.csv");
    ok(&lab(dir.path(), &cfg, &["compare", "--format", "csv", "--out", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with(&header()));
}

#[test]
fn teststat_samples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&lab(dir.path(), r#"{"upsilon": 1.5, "grid_points": 51, "reps": 7, "seed": 2}"#, &["teststat", "--format", "csv"]));
    assert_eq!(csv.lines().count(), 2 + 7);
    let bad = lab(dir.path(), r#"{"upsilon": 0.5, "grid_points": 51, "reps": 7}"#, &["teststat"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("upsilon"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), "{not json", &["params"]);
    assert!(!out.status.success());
    let out = lab(dir.path(), r#"{"kind": "upsilon", "k": 2, "u": 4}"#, &["constants", "--format", "csv"]);
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_extremes-lab")).arg("params").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}
