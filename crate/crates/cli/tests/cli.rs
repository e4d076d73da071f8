use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn svelab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svelab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SVELAB_OUT")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constants_prints_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = svelab(
        &["constants", "--alpha", "0", "--tol", "1e-8", "--out", "c"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1);
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    for key in [
        "alpha",
        "kappa1",
        "kappa2",
        "kappa3",
        "kappa4",
        "kappa5",
        "middle_term",
        "tol",
        "tail_bound_used",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(
        v["kappa2"].as_f64().unwrap(),
        std::f64::consts::FRAC_1_SQRT_2
    );
    assert_eq!(v["middle_term"].as_f64().unwrap(), 0.5);
    for f in ["config.resolved.json", "constants.csv", "report.json"] {
        assert!(dir.path().join("c").join(f).is_file(), "{f}");
    }
    assert_eq!(
        json(&dir.path().join("c/report.json"))["passed"],
        Value::Bool(true)
    );
}

#[test]
fn negative_alpha_list_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = svelab(
        &["constants", "--alpha", "-0.25,0.25", "--out", "c"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"alpha": [0.1], "seed": 99}"#,
    )
    .unwrap();
    let out = svelab(
        &[
            "constants",
            "--alpha",
            "0.3",
            "--seed",
            "5",
            "--tol",
            "1e-7",
            "--config",
            "cfg.json",
            "--out",
            "c",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let cfg = json(&dir.path().join("c/config.resolved.json"));
    assert_eq!(cfg["config"]["alpha"], serde_json::json!([0.1]));
    assert_eq!(cfg["config"]["seed"], serde_json::json!(99));
    assert_eq!(cfg["config"]["tol"], serde_json::json!(1e-7));
}

#[test]
fn config_for_another_study_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"study": "rate"}"#).unwrap();
    let out = svelab(
        &["constants", "--config", "cfg.json", "--out", "c"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_svelab"))
        .args(["constants", "--alpha", "0"])
        .current_dir(dir.path())
        .env("SVELAB_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("report.json").is_file());
}

#[test]
fn failed_gate_exits_nonzero() {
    // too few meshes for the off-grid variance to separate from the grid one
    let dir = tempfile::tempdir().unwrap();
    let out = svelab(&["remark-probe", "--n", "64,128", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("r/report.json"));
    assert_eq!(report["passed"], Value::Bool(false));
    assert!(report["gates"]
        .as_array()
        .unwrap()
        .iter()
        .any(|g| g["passed"] == Value::Bool(false)));
    let csv = std::fs::read_to_string(dir.path().join("r/remark.csv")).unwrap();
    assert!(csv.starts_with("alpha,n,var_offgrid,var_grid,kappa1_sq"));
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = svelab(&["rate", "--alpha", "0.7", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("r").exists());
    let out = svelab(&["rate", "--sigma", "cubic:1", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_rate_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        vec![
            "rate", "--alpha", "0.25", "--n", "8,16,32", "--refine", "8", "--paths", "200",
            "--seed", "3", "--out", o,
        ]
    };
    let a = svelab(&args("a"), dir.path());
    let mut b_args = args("b");
    b_args.extend(["--threads", "2"]);
    let b = svelab(&b_args, dir.path());
    assert!(a.status.code().unwrap() <= 1 && b.status.code().unwrap() <= 1);
    for f in ["rate.csv", "rate_fit.csv"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}
