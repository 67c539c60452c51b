use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn hkt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkt")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn selftest_passes_quickly_and_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let first = hkt(&["selftest", "--n", "1", "--grid", "8", "--seed", "11", "--out", &out_arg(a.path())]);
    assert!(start.elapsed() < Duration::from_secs(30));
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stdout));
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert!(stdout.contains("PASS manufactured_recovery"));
    assert!(!stdout.contains("FAIL"));
    let ra = fs::read(a.path().join("report.json")).unwrap();
    let second = hkt(&["selftest", "--n", "1", "--grid", "8", "--seed", "11", "--out", &out_arg(a.path())]);
    assert!(second.status.success());
    let rb = fs::read(a.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    assert!(a.path().join("timings.json").exists());
}

#[test]
fn solve_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{ "mode": "solve", "n": 1, "grid": 16,
             "f": { "modes": [ { "k": [1, 1], "amplitude": 0.3, "phase": 0.5 } ], "constant": 0.2 } }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = hkt(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["report.json", "estimates.csv", "trace.csv", "phi.hktf", "f.hktf"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["solve"]["residual_norm"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["input_hash"].as_str().unwrap().len(), 64);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,residual,a,margin,step"));
}

#[test]
fn nyquist_mode_is_rejected_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{\n  \"mode\": \"solve\",\n  \"grid\": 8,\n  \"f\": { \"modes\": [\n    { \"k\": [4, 0], \"amplitude\": 0.1 } ] }\n}\n").unwrap();
    let o = hkt(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 5") && err.contains("dealiased band"), "{err}");
}

#[test]
fn flag_errors_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = hkt(&["solve", "--grid", "15", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--grid"));
    let o = hkt(&["verify", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--seed"));
}

#[test]
fn violated_condition_gives_nonzero_exit_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "mode": "solve", "grid": 8, "calibrate_a": false, "f": { "constant": 0.1 } }"#).unwrap();
    let o = hkt(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["solve_error"]["kind"], "necessary_condition_violated");
    assert_eq!(report["passed"], false);
}
