use std::fs;
use std::process::{Command, Output};

fn gbpinn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbpinn"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {stderr}"))
}

const TINY: &str = r#"
problem = "sp1d"
epsilon = 0.05
grid = [51]

[plan]
seed = 3

[[plan.stages]]
architecture = "[6]"
rho = 1.0
steps = 20

[[plan.stages]]
architecture = "F2[4]"
rho = 0.5
steps = 20

[plan.weights]
interior = 1.0
boundary = 10.0
initial = 0.0

[plan.batches]
interior = 32
boundary = 2
initial = 0

[plan.optimizer]
learning_rate = 0.001
decay_rate = 0.95
decay_period = 10000
beta1 = 0.9
beta2 = 0.999
epsilon = 1e-8
"#;

#[test]
fn run_from_config_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("out");
    let cache = dir.path().join("cache");
    let res = gbpinn(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--cache-dir",
        cache.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(v["relative_l2"].as_f64().unwrap() > 0.0);
    for f in [
        "config.echo",
        "trace.jsonl",
        "summary.json",
        "timing.json",
        "errors.csv",
        "figure.svg",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn missing_config_reports_json_error() {
    let res = gbpinn(&[
        "run",
        "--config",
        "/nonexistent/run.toml",
        "--out",
        "/tmp/unused-gbpinn",
    ]);
    assert!(!res.status.success());
    let e = error_json(&res);
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("run.toml"));
}

#[test]
fn bad_preset_and_bad_config_fail_cleanly() {
    let res = gbpinn(&["run", "--preset", "heat3d", "--out", "/tmp/unused-gbpinn"]);
    assert!(!res.status.success());
    assert!(error_json(&res)["message"].as_str().unwrap().contains("heat3d"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, TINY.replace("\"[6]\"", "\"[0]\"")).unwrap();
    let res = gbpinn(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert!(error_json(&res)["error"].is_string());
}

#[test]
fn reference_rejects_closed_form_problems() {
    let dir = tempfile::tempdir().unwrap();
    let res = gbpinn(&["reference", "--problem", "sp1d", "--out", dir.path().to_str().unwrap()]);
    assert!(!res.status.success());
    assert_eq!(error_json(&res)["error"], "usage");
}

#[test]
fn reference_builds_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "reference",
        "--problem",
        "reaction",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let first = gbpinn(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let v: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert!(v["check"]["space_change"].as_f64().unwrap() < 1e-6);
    let second = gbpinn(&args);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}
