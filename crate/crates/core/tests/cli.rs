//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

use advmri::report::{self, ExperimentManifest};

fn advmri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advmri")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = advmri(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn manifest(dir: &Path) -> ExperimentManifest {
    ExperimentManifest::read(&dir.join("manifest.json")).unwrap()
}

#[test]
fn phantom_count_zero_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["--out", out, "phantom", "--n", "32", "--count", "0"]);
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec!["manifest.json"]);
    assert!(manifest(dir.path()).outputs.is_empty());
}

#[test]
fn manifest_digests_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["--out", out, "--seed", "7", "phantom", "--n", "256"]);
    let m = manifest(dir.path());
    assert_eq!(m.seed, 7);
    assert_eq!(m.command, "phantom");
    let path = dir.path().join("phantom_0000.cfi");
    assert_eq!(m.outputs["phantom_0000.cfi"], report::sha256_file(&path).unwrap());
    assert_eq!(report::read_image(&path).unwrap().n(), 256);
}

#[test]
fn spike1d_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let text = ok(&["--out", out, "spike1d", "--n", "256", "--m", "32"]);
    assert!(text.contains("alpha = 8.000000"), "{text}");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("spike1d.json")).unwrap()).unwrap();
    assert!(v["alpha"].as_f64().unwrap() >= 8.0 * (1.0 - 1e-12));
    let text = ok(&["--out", out, "spike1d", "--n", "8", "--full"]);
    assert!(text.contains("alpha = 1.000000"), "{text}");
}

#[test]
fn recover1d_tv_mode_warns_and_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = advmri(&["--out", out, "recover1d", "--mode", "tv", "--n", "64", "--s", "2", "--m", "64", "--trials", "4"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("zero frequency"));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("recover1d.json")).unwrap()).unwrap();
    assert_eq!(v["rate"].as_f64().unwrap(), 1.0);
}

#[test]
fn attack_pipeline_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let imgs = d.join("imgs");
    ok(&["--out", &s(&imgs), "--seed", "2", "phantom", "--n", "64", "--count", "1"]);
    let res = d.join("res");
    let text = ok(&[
        "--out",
        &s(&res),
        "attack",
        "--image",
        &s(&imgs.join("phantom_0000.cfi")),
        "--lines",
        "20",
        "--noise-rel",
        "0.04",
        "--grid",
        "1x1",
        "--steps",
        "8",
        "--unroll",
        "20",
        "--iterations",
        "100",
        "--lambda",
        "0.05",
    ]);
    assert!(text.contains("alpha"));
    let rows = report::read_rows(&res.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].alpha > 1.0, "alpha = {}", rows[0].alpha);
    assert_eq!(rows[0].mu, (32.5, 32.5));
    assert!(rows[0].wall_time.is_none());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(res.join("phantom_0000_attack.json")).unwrap()).unwrap();
    assert_eq!(summary["per_center_scores"].as_array().unwrap().len(), 1);

    let table = ok(&["--out", &s(&d.join("tab")), "table", "--results", &s(&res)]);
    assert!(table.contains("20 lines"));
    assert!(table.contains("4.0%"));
}

#[test]
fn auto_lambda_without_calibration_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["--out", out, "phantom", "--n", "16"]);
    let img = dir.path().join("phantom_0000.cfi");
    let res = advmri(&["--out", out, "attack", "--image", img.to_str().unwrap(), "--lines", "5"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("--lambda auto"));
}

#[test]
fn unreadable_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = advmri(&["--out", out, "render", "--image", "/nonexistent/x.cfi"]);
    assert!(!res.status.success());
}
