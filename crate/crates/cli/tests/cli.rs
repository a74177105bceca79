use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hilbert(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hilbert"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn unknown_config_key_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"experiment": "dist", "samplez": 10}"#).unwrap();
    let out = dir.path().join("out");
    let o = hilbert(&["run", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("samplez"));
    assert!(!out.exists());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for args in [
        vec!["run", "nonsense"],
        vec!["run", "delta", "--group", "no_such_group.json"],
        vec!["run", "dist", "--domain", "{\"type\": \"simplex\""],
        vec!["run", "dist", "--workers", "0"],
    ] {
        let o = hilbert(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists());
}

#[test]
fn compute_failure_exits_1_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // No proper extremal boundary points to aim at in a triangle.
    let o = hilbert(&["run", "busemann-check", "--domain", r#"{"type": "simplex", "dim": 2}"#], &out);
    assert_eq!(o.status.code(), Some(1));
    let manifest = std::fs::read_to_string(out.join("MANIFEST")).unwrap();
    assert!(manifest.contains("status: failed"), "{manifest}");
    assert!(!out.join("busemann-check.json").exists());
}

#[test]
fn hex_check_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilbert(&["run", "hex-check", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path(), "hex-check");
    assert!(s["results"]["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(s["pass"], true);
    assert_eq!(s["seed"], 3);
    let csv = std::fs::read_to_string(dir.path().join("hex-check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10_001);
    assert!(std::fs::read_to_string(dir.path().join("MANIFEST")).unwrap().contains("status: ok"));
}

#[test]
fn delta_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilbert(
        &["run", "delta", "--group", "fuchsian_triangle_237.json", "--domain", r#"{"type":"ellipsoid","dim":2}"#, "--max-word", "12"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path(), "delta");
    let d = s["results"]["delta_hat"].as_f64().unwrap();
    assert!((0.85..=1.1).contains(&d), "{d}");
    assert_eq!(s["input"]["config"]["max_word"], 12);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "dist", "samples": 50, "seed": 1}"#).unwrap();
    let out = dir.path().join("out");
    let o = hilbert(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9"], &out);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out, "dist");
    assert_eq!(s["seed"], 9);
    assert_eq!(s["results"]["pairs"], 50);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, w) in [(&a, "1"), (&b, "4")] {
        let o = hilbert(&["run", "flow-check", "--seed", "11", "--workers", w], out);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["flow-check.csv", "flow-check.json", "MANIFEST"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
