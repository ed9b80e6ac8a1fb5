use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn trof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trof"))
        .args(args)
        .output()
        .expect("spawn trof")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (path(&dir, "a.pgm"), path(&dir, "b.pgm"), path(&dir, "c.pgm"));
    for (out, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let o = trof(&["synth", "example2", "--size", "32", "--seed", seed, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &str| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn segment_file_with_truth_writes_report_and_labels() {
    let dir = TempDir::new().unwrap();
    let (img, truth) = (path(&dir, "f.pgm"), path(&dir, "t.pgm"));
    let (labels, raw, report) = (path(&dir, "l.pgm"), path(&dir, "r.pgm"), path(&dir, "run.json"));
    let o = trof(&["synth", "example3", "--size", "64", "--out", &img, "--truth", &truth]);
    assert!(o.status.success());
    let o = trof(&[
        "segment", &img, "--phases", "5", "--mu", "8", "--truth", &truth, "--out", &labels, "--out-raw", &raw,
        "--report", &report,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("SA = "));

    let v = read_json(&report);
    assert_eq!(v["result"]["K"], 5);
    assert_eq!(v["input"]["width"], 64);
    assert!(v["metrics"]["SA"].as_f64().unwrap() > 0.9);
    assert!(!v["trace"].as_array().unwrap().is_empty());

    let a = trof::io::read_labels(Path::new(&labels), Some(5)).unwrap();
    let b = trof::io::read_labels(Path::new(&raw), Some(5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn explicit_thresholds_skip_clustering() {
    let dir = TempDir::new().unwrap();
    let img = path(&dir, "f.pgm");
    let report = path(&dir, "run.json");
    assert!(trof(&["synth", "example4", "--size", "32", "--out", &img]).status.success());
    let o = trof(&["segment", &img, "--phases", "2", "--tau", "0.5", "--report", &report]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&report);
    assert_eq!(v["parameters"]["init"], "explicit");
    assert_eq!(v["tau0"], serde_json::json!([0.5]));
    assert!(v.get("metrics").is_none_or(Value::is_null));
}

#[test]
fn preset_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    for p in [&a, &b] {
        let o = trof(&["segment", "--preset", "example3", "--size", "48", "--seed", "1", "--report", p]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (mut va, mut vb) = (read_json(&a), read_json(&b));
    va.as_object_mut().unwrap().remove("timings_ms");
    vb.as_object_mut().unwrap().remove("timings_ms");
    assert_eq!(va, vb);
    assert!(va["metrics"]["SA"].as_f64().is_some());
}

#[test]
fn verify_layer_cake_counts_images() {
    let o = trof(&["verify", "--suite", "layer-cake", "--grid", "3x3", "--trials", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("layer-cake"));
    assert!(out.contains("50"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.pgm");
    let out = path(&dir, "x.pgm");
    assert_eq!(trof(&["segment", &missing]).status.code(), Some(2));
    assert_eq!(trof(&["synth", "example9", "--out", &out]).status.code(), Some(2));
    assert_eq!(trof(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(trof(&["verify", "--grid", "3by3"]).status.code(), Some(2));
    assert_eq!(
        trof(&["segment", "--preset", "example4", "--phases", "3", "--tau", "0.5"]).status.code(),
        Some(2)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_trof"))
        .args(["verify", "--suite", "linkage"])
        .env("TROF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let p = path(&dir, &format!("r{threads}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_trof"))
            .args(["segment", "--preset", "example2", "--size", "48", "--report", &p])
            .env("TROF_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        let mut v = read_json(&p);
        v.as_object_mut().unwrap().remove("timings_ms");
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn preset_keeps_its_init_source_unless_overridden() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "r.json");
    let source = |extra: &[&str]| {
        let mut args = vec!["segment", "--preset", "example5", "--size", "40", "--report", &p];
        args.extend_from_slice(extra);
        assert!(trof(&args).status.success());
        read_json(&p)["parameters"]["init_source"].clone()
    };
    assert_eq!(source(&[]), "f");
    assert_eq!(source(&["--init-source", "u"]), "u");
}
