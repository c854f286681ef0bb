mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;

fn bw(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breakwatch")).args(args).current_dir(cwd).output().unwrap()
}

fn detect_args(triple: &str, report: &str) -> Vec<String> {
    let f = fixtures();
    let p = |x: &str| f.join(triple).join(x).display().to_string();
    vec![
        "detect".into(),
        "--nf".into(),
        p("none.json"),
        "--nb".into(),
        p("breaking.json"),
        "--bf".into(),
        p("fixed.json"),
        "--model".into(),
        f.join("models/breakage.json").display().to_string(),
        "--saliency-model".into(),
        f.join("models/saliency.json").display().to_string(),
        "--report".into(),
        report.into(),
    ]
}

fn run(args: &[String], cwd: &Path) -> Output {
    let a: Vec<&str> = args.iter().map(String::as_str).collect();
    bw(&a, cwd)
}

#[test]
fn detect_exit_codes_and_reproducible_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&detect_args("broken_video", "a.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&detect_args("broken_video", "b.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let a = std::fs::read(tmp.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(tmp.path().join("b.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["breaking"], true);
    assert!(report["model_versions"]["breakage"].as_str().unwrap().len() >= 16);
    assert!(!report["pages"][0]["verdict"]["offending_roots"].as_array().unwrap().is_empty());

    let out = run(&detect_args("legit_ad", "c.txt"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("c.txt")).unwrap();
    assert!(text.contains("non-breaking"), "{text}");

    let out = bw(&["report", "a.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("BREAKING"));
}

#[test]
fn batch_detect() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixtures();
    for t in ["broken_video", "legit_ad"] {
        let dst = tmp.path().join("batch").join(t);
        std::fs::create_dir_all(&dst).unwrap();
        for v in ["none.json", "breaking.json", "fixed.json"] {
            std::fs::copy(f.join(t).join(v), dst.join(v)).unwrap();
        }
    }
    let model = f.join("models/breakage.json").display().to_string();
    let out = bw(&["detect", "--batch", "batch", "--model", &model, "--report", "r.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("r.json")).unwrap()).unwrap();
    let verdicts: Vec<bool> = r["pages"].as_array().unwrap().iter().map(|p| p["verdict"]["breaking"].as_bool().unwrap()).collect();
    assert_eq!(verdicts, vec![true, false]);
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bw(&["detect"], tmp.path()).status.code(), Some(1));
    assert_eq!(bw(&["detect", "--heuristic", "q3", "--nf", "x", "--nb", "y"], tmp.path()).status.code(), Some(1));
    assert_eq!(bw(&["diff", "missing_a.json", "missing_b.json"], tmp.path()).status.code(), Some(1));
    assert_eq!(bw(&["--help"], tmp.path()).status.code(), Some(0));
    std::fs::write(tmp.path().join("bad.toml"), "[diff]\nedit_threshold = 3.0\n").unwrap();
    let out = bw(&["--config", "bad.toml", "diff", "a", "b"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edit_threshold"));
}

#[test]
fn diff_label_features_train_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixtures();
    let t = f.join("broken_video");
    let s = |x: &str| t.join(x).display().to_string();
    for (a, b, out) in [("none.json", "fixed.json", "nf.json"), ("none.json", "breaking.json", "nb.json"), ("breaking.json", "fixed.json", "bf.json")] {
        let o = bw(&["diff", &s(a), &s(b), "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bw(&["label", "--nf", "nf.json", "--nb", "nb.json", "--bf", "bf.json", "--out", "labels.json"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let labels: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("labels.json")).unwrap()).unwrap();
    assert!(labels.as_array().unwrap().iter().any(|l| l["label"] == "BROKEN"));

    let legit = f.join("legit_ad").display().to_string();
    let o = bw(&["features", "--triple", &t.display().to_string(), "--triple", &legit, "--out", "rows.jsonl"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(tmp.path().join("rows.jsonl")).unwrap();
    assert!(rows.lines().count() >= 3);

    let o = bw(&["segment", &s("none.json"), "--rounds", "3", "--out", "seg.json"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let sal = f.join("models/saliency.json").display().to_string();
    let o = bw(&["saliency", "plan", &s("none.json"), "--model", &sal, "--max", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let plans: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(plans.as_array().unwrap().len() <= 3);
}

#[test]
fn ingest_writes_one_line_per_issue() {
    let tmp = tempfile::tempdir().unwrap();
    let export = fixtures().join("forum/issues.json").display().to_string();
    let o = bw(&["ingest", &export, "--out", "issues.jsonl"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("issues.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 30);
}
