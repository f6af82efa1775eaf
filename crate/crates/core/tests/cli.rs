use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use audio_ensemble::audio_io::{load_dataset, DatasetLayout};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_audio-ensemble"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn small_corpus(dir: &Path, per_class: usize) {
    let out = bin(&["synth", "--out", s(dir), "--per-class", &per_class.to_string(), "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_writes_loadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["synth", "--out", s(dir.path()), "--classes", "10", "--per-class", "30"]);
    assert!(out.status.success());
    let wavs = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(wavs, 300);
    let manifest = load_dataset(dir.path(), DatasetLayout::Fsdd).unwrap();
    assert_eq!(manifest.len(), 300);
    assert_eq!(manifest.class_counts(), vec![30; 10]);
    for e in manifest.entries.iter().step_by(37) {
        let clip = e.load().unwrap();
        assert_eq!(clip.sample_rate(), 8000);
        assert_eq!(clip.samples().len(), 12_000);
    }
}

#[test]
fn experiment_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(&dir.path().join("data"), 6);
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "dataset = \"data\"\nfeatures = [\"ZCR\", \"MS\"]\nrepeats = 2\n\n[train]\nepochs = 2\nbatch_size = 8\n",
    )
    .unwrap();
    let run = |out: &str| {
        let o = bin(&[
            "experiment", "--config", s(&config), "--seed", "7", "--omit-timing", "--quiet", "--out",
            s(&dir.path().join(out)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let report = fs::read(dir.path().join("a/report.md")).unwrap();
    assert_eq!(report, fs::read(dir.path().join("b/report.md")).unwrap());
    assert_eq!(report, a);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 2 + 3);
    assert!(text.contains("| CNN (MS and ZCR) |"));
    for sub in ["run0_MS+ZCR.csv", "run1_MS.csv"] {
        let x = fs::read(dir.path().join("a/probabilities").join(sub)).unwrap();
        assert_eq!(x, fs::read(dir.path().join("b/probabilities").join(sub)).unwrap());
    }
    assert!(dir.path().join("a/curves/run1_ZCR.csv").is_file());
}

#[test]
fn train_zcr_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_corpus(&data, 5);
    let ckpt = dir.path().join("zcr.ckpt");
    let curves = dir.path().join("zcr_curve.csv");
    let out = bin(&[
        "train", "--dataset", s(&data), "--feature", "ZCR", "--out", s(&ckpt), "--epochs", "2",
        "--batch-size", "8", "--curves", s(&curves), "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ckpt.is_file());
    assert_eq!(fs::read_to_string(&curves).unwrap().lines().count(), 3);

    let out = bin(&[
        "evaluate", "--dataset", s(&data), "--checkpoint", s(&ckpt), "--format", "csv", "--dump",
        s(&dir.path().join("dump")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "configuration,accuracy,infer_time_ms,extract_time_ms");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("CNN (ZCR),"));
    assert!(dir.path().join("dump/run0_ZCR.csv").is_file());
}

#[test]
fn extract_writes_feature_maps() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_corpus(&data, 2);
    let out_dir = dir.path().join("maps");
    let out = bin(&["extract", "--dataset", s(&data), "--feature", "MFCC", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(out_dir.join("MFCC")).unwrap().count(), 20);
    let map = audio_ensemble::dsp::FeatureMap::load(out_dir.join("MFCC/3_synth_1.fmap")).unwrap();
    assert!(map.values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin(&[]).status.code(), Some(2));
    assert_eq!(bin(&["train"]).status.code(), Some(2));
    assert_eq!(bin(&["evaluate", "--format", "xml", "--dataset", "x"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    let help = bin(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["extract", "train", "evaluate", "experiment", "synth"] {
        assert!(String::from_utf8_lossy(&help.stdout).contains(sub));
    }
}

#[test]
fn runtime_errors_exit_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["experiment", "--config", s(&dir.path().join("missing.toml"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "dataset = \"x\"\nrepeats = 0\n").unwrap();
    let out = bin(&["experiment", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repeats"));

    let out = bin(&["evaluate", "--dataset", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}
