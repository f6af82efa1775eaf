//! Acceptance gates. Prints one PASS / FAIL / NOT RUN line per criterion and
//! exits non-zero if any criterion fails.
//!
//! The spoken-digit criteria need the Free Spoken Digit Dataset recordings
//! directory in `FSDD_ROOT`; without it they print NOT RUN.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use audio_ensemble::audio_io::{split_dataset, DatasetLayout, DatasetManifest, ManifestEntry, SplitSpec};
use audio_ensemble::dsp::{dct_ii_orthonormal, fft_in_place, hz_to_mel, mel_to_hz, FeatureKind};
use audio_ensemble::ensemble::average_probabilities;
use audio_ensemble::harness::{
    emit_table, format_accuracy, run_experiment, write_synth_corpus, ExperimentSpec, MetricsReport, SynthSpec,
    TableFormat,
};
use audio_ensemble::nn::{
    batch_cross_entropy, build_table1_cnn, ClassProbabilities, Layer, LayerSpec, Mode, Network, NnRng,
    OptimizerKind, Tensor,
};
use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

const FFT_REL_TOL: f64 = 1e-9;
const DCT_TOL: f64 = 1e-9;
const MEL_REL_TOL: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-4;
const SOFTMAX_SUM_TOL: f64 = 1e-6;
const BN_MEAN_TOL: f64 = 1e-6;
const BN_VAR_TOL: f64 = 1e-4;
const DROPOUT_TOL: f64 = 1e-6;

const FSDD_MFCC_MIN: f64 = 0.93;
const FSDD_MS_MIN: f64 = 0.92;
const FSDD_ZCR_GAP: f64 = 0.25;
const FSDD_ENSEMBLE_SLACK: f64 = 0.005;
const FSDD_ENSEMBLE_MIN: f64 = 0.95;

const SYNTH_MIN_ACCURACY: f64 = 0.99;
const SYNTH_MAX_EPOCHS: usize = 30;
const SYNTH_MAX_TIME: Duration = Duration::from_secs(180);

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---- spoken digits -------------------------------------------------------

fn fsdd_report() -> Option<Result<(MetricsReport, Duration), String>> {
    let root = std::env::var_os("FSDD_ROOT").filter(|v| !v.is_empty())?;
    let mut spec = ExperimentSpec::new(PathBuf::from(root));
    spec.layout = DatasetLayout::Fsdd;
    spec.repeats = 3;
    let started = Instant::now();
    Some(
        run_experiment(&spec)
            .map(|r| (r, started.elapsed()))
            .map_err(|e| e.to_string()),
    )
}

fn accuracies(report: &MetricsReport, members: &[FeatureKind]) -> Vec<f64> {
    report.row(members).map(|r| r.accuracies.clone()).unwrap_or_default()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn fsdd_single_feature(fsdd: &Option<Result<(MetricsReport, Duration), String>>) -> Outcome {
    match fsdd {
        None => Outcome::NotRun("FSDD_ROOT not set".into()),
        Some(Err(e)) => Outcome::Fail(e.clone()),
        Some(Ok((report, elapsed))) => {
            let mfcc = mean(&accuracies(report, &[FeatureKind::Mfcc]));
            let ms = mean(&accuracies(report, &[FeatureKind::Ms]));
            verdict(
                mfcc >= FSDD_MFCC_MIN && ms >= FSDD_MS_MIN,
                format!(
                    "MFCC {mfcc:.4} (>= {FSDD_MFCC_MIN}), MS {ms:.4} (>= {FSDD_MS_MIN}) over 3 seeds; \
                     whole experiment {:.1} min",
                    elapsed.as_secs_f64() / 60.0
                ),
            )
        }
    }
}

fn fsdd_ordering(fsdd: &Option<Result<(MetricsReport, Duration), String>>) -> Outcome {
    match fsdd {
        None => Outcome::NotRun("FSDD_ROOT not set".into()),
        Some(Err(e)) => Outcome::Fail(e.clone()),
        Some(Ok((report, _))) => {
            let zcr = accuracies(report, &[FeatureKind::Zcr]);
            let mfcc = accuracies(report, &[FeatureKind::Mfcc]);
            let gaps: Vec<f64> = mfcc.iter().zip(&zcr).map(|(m, z)| m - z).collect();
            verdict(
                !gaps.is_empty() && gaps.iter().all(|g| *g >= FSDD_ZCR_GAP),
                format!("MFCC - ZCR per seed {gaps:.4?} (each >= {FSDD_ZCR_GAP})"),
            )
        }
    }
}

fn fsdd_ensemble(fsdd: &Option<Result<(MetricsReport, Duration), String>>) -> Outcome {
    match fsdd {
        None => Outcome::NotRun("FSDD_ROOT not set".into()),
        Some(Err(e)) => Outcome::Fail(e.clone()),
        Some(Ok((report, _))) => {
            let pair = mean(&accuracies(report, &[FeatureKind::Ms, FeatureKind::Mfcc]));
            let best = FeatureKind::ALL
                .iter()
                .map(|&k| mean(&accuracies(report, &[k])))
                .fold(f64::MIN, f64::max);
            verdict(
                pair >= best - FSDD_ENSEMBLE_SLACK && pair >= FSDD_ENSEMBLE_MIN,
                format!(
                    "MS+MFCC {pair:.4} vs best single {best:.4} (>= best - {FSDD_ENSEMBLE_SLACK} and >= {FSDD_ENSEMBLE_MIN})"
                ),
            )
        }
    }
}

// ---- synthetic corpus ----------------------------------------------------

fn synthetic_end_to_end() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    if let Err(e) = write_synth_corpus(dir.path(), &SynthSpec::default()) {
        return Outcome::Fail(e.to_string());
    }
    let mut spec = ExperimentSpec::new(dir.path());
    spec.features = vec![FeatureKind::Ms];
    spec.repeats = 1;
    spec.train.epochs = SYNTH_MAX_EPOCHS;
    spec.train.batch_size = 4;
    spec.train.optimizer = OptimizerKind::Sgd;
    let report = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let elapsed = started.elapsed();
    let acc = report.rows[0].accuracy_mean;
    verdict(
        acc >= SYNTH_MIN_ACCURACY && elapsed <= SYNTH_MAX_TIME,
        format!(
            "CNN (MS) test accuracy {acc:.4} (>= {SYNTH_MIN_ACCURACY}) after {SYNTH_MAX_EPOCHS} epochs, \
             {:.1} s end to end (<= {} s)",
            elapsed.as_secs_f64(),
            SYNTH_MAX_TIME.as_secs()
        ),
    )
}

// ---- numerical oracles ---------------------------------------------------

fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Worst error relative to the largest oracle magnitude, and worst Parseval error.
fn fft_oracle() -> (f64, f64) {
    let mut rng = NnRng::seed_from_u64(1);
    let (mut worst, mut parseval) = (0.0f64, 0.0f64);
    for n in [8usize, 16, 64, 256] {
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_in_place(&mut buf);
            let want = naive_dft(&x);
            let scale = want.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (g, w) in buf.iter().zip(&want) {
                worst = worst.max((g - w).norm() / scale);
            }
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq: f64 = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            parseval = parseval.max((time - freq).abs() / time);
        }
    }
    (worst, parseval)
}

fn dct_oracle() -> f64 {
    let basis = |n: usize, k: usize, i: usize| {
        let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        s * (PI * (i as f64 + 0.5) * k as f64 / n as f64).cos()
    };
    let mut rng = NnRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in [1usize, 2, 5, 20, 40, 64] {
        let mut impulse = vec![0.0; n];
        impulse[0] = 1.0;
        for (k, v) in dct_ii_orthonormal(&impulse, n).iter().enumerate() {
            worst = worst.max((v - basis(n, k, 0)).abs());
        }
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            for (k, v) in dct_ii_orthonormal(&x, n).iter().enumerate() {
                let want: f64 = x.iter().enumerate().map(|(i, xi)| xi * basis(n, k, i)).sum();
                worst = worst.max((v - want).abs());
            }
        }
    }
    worst
}

/// Worst round-trip relative error over [0, 24000] Hz, and whether both maps increase.
fn mel_oracle() -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut increasing = true;
    let (mut prev_mel, mut prev_hz) = (f64::MIN, f64::MIN);
    for i in 0..10_000 {
        let f = 24_000.0 * i as f64 / 9_999.0;
        let m = hz_to_mel(f).expect("non-negative");
        let back = mel_to_hz(m).expect("non-negative");
        worst = worst.max((back - f).abs() / f.max(1.0));
        let m_probe = 4000.0 * i as f64 / 9_999.0;
        let h = mel_to_hz(m_probe).expect("non-negative");
        increasing &= m > prev_mel && h > prev_hz;
        prev_mel = m;
        prev_hz = h;
    }
    (worst, increasing)
}

fn gradient_oracle() -> f64 {
    const EPS: f64 = 1e-5;
    const MASKS: u64 = 1234;
    let mut net: Network<f64> = Network::new(&build_table1_cnn(), 7).expect("valid spec");
    let mut rng = NnRng::seed_from_u64(11);
    let x = Tensor::from_vec(&[3, 32, 32, 1], (0..3 * 1024).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape");
    let labels = [0, 4, 9];
    let loss_at = |net: &Network<f64>| {
        let probs = net
            .forward(x.clone(), Mode::Train, &mut NnRng::seed_from_u64(MASKS))
            .expect("forward");
        batch_cross_entropy(&probs, &labels)
    };
    let (_, grads, _) = net
        .loss_and_grads(x.clone(), &labels, Mode::Train, &mut NnRng::seed_from_u64(MASKS))
        .expect("gradients");
    let slots: Vec<(usize, usize)> = net
        .layers()
        .iter()
        .enumerate()
        .flat_map(|(i, l)| (0..l.params().len()).map(move |p| (i, p)))
        .collect();
    let mut pick = NnRng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let (li, pi) = slots[k % slots.len()];
        let idx = pick.random_range(0..net.layers()[li].params()[pi].len());
        let orig = net.layers()[li].params()[pi].data()[idx];
        net.layers_mut()[li].params_mut()[pi].data_mut()[idx] = orig + EPS;
        let plus = loss_at(&net);
        net.layers_mut()[li].params_mut()[pi].data_mut()[idx] = orig - EPS;
        let minus = loss_at(&net);
        net.layers_mut()[li].params_mut()[pi].data_mut()[idx] = orig;
        let numeric = (plus - minus) / (2.0 * EPS);
        let analytic = grads[li][pi].data()[idx];
        // floor: a conv bias feeding batch normalization has an exactly-zero gradient
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5));
    }
    worst
}

fn softmax_oracle() -> f64 {
    let mut rng = NnRng::seed_from_u64(21);
    let dist = Normal::new(0.0f64, 30.0).expect("finite");
    let x = Tensor::from_vec(&[10_000, 10], (0..100_000).map(|_| dist.sample(&mut rng)).collect()).expect("shape");
    let y = Layer::<f64>::Softmax.forward(x, Mode::Eval, &mut rng).expect("forward").0;
    y.data()
        .chunks_exact(10)
        .map(|row| {
            let in_range = row.iter().all(|v| (0.0..=1.0).contains(v));
            if in_range {
                (row.iter().sum::<f64>() - 1.0).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

fn batchnorm_oracle() -> (f64, f64) {
    let layer = Layer::<f64>::BatchNorm {
        gamma: Tensor::from_vec(&[4], vec![1.0; 4]).expect("shape"),
        beta: Tensor::zeros(&[4]),
        moving_mean: Tensor::zeros(&[4]),
        moving_var: Tensor::from_vec(&[4], vec![1.0; 4]).expect("shape"),
        epsilon: 1e-3,
        momentum: 0.99,
    };
    let mut rng = NnRng::seed_from_u64(6);
    let (mut worst_mean, mut worst_var) = (0.0f64, 0.0f64);
    for trial in 0..20 {
        let dist = Normal::new(trial as f64 - 10.0, 100.0).expect("finite");
        let x = Tensor::from_vec(&[64, 3, 3, 4], (0..64 * 36).map(|_| dist.sample(&mut rng)).collect()).expect("shape");
        let y = layer.forward(x, Mode::Train, &mut rng).expect("forward").0;
        for ch in 0..4 {
            let v: Vec<f64> = y.data().iter().skip(ch).step_by(4).copied().collect();
            let m = mean(&v);
            let var = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64;
            worst_mean = worst_mean.max(m.abs());
            worst_var = worst_var.max((var - 1.0).abs());
        }
    }
    (worst_mean, worst_var)
}

fn dropout_oracle() -> f64 {
    let mut spec = build_table1_cnn();
    for layer in &mut spec.layers {
        match layer {
            LayerSpec::Dropout { rate } => *rate = 0.0,
            LayerSpec::BatchNorm { momentum, .. } => *momentum = 0.0,
            _ => {}
        }
    }
    let mut net: Network<f64> = Network::new(&spec, 3).expect("valid spec");
    let mut rng = NnRng::seed_from_u64(3);
    let x = Tensor::from_vec(&[8, 32, 32, 1], (0..8 * 1024).map(|_| rng.random()).collect()).expect("shape");
    let (train, caches) = net.forward_cached(x.clone(), Mode::Train, &mut rng).expect("forward");
    net.update_running_stats(&caches);
    let eval = net.predict(x).expect("forward");
    train.data().iter().zip(eval.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn random_probs(rng: &mut NnRng) -> ClassProbabilities {
    let raw: Vec<f64> = (0..10).map(|_| rng.random::<f64>().powi(3)).collect();
    let total: f64 = raw.iter().sum();
    ClassProbabilities::new(raw.iter().map(|v| v / total).collect()).expect("valid")
}

/// Cases violating permutation invariance, and cases outside member bounds.
fn ensemble_oracle() -> (usize, usize) {
    let mut rng = NnRng::seed_from_u64(4);
    let (mut order, mut bounds) = (0, 0);
    for case in 0..500 {
        let members: Vec<ClassProbabilities> = (0..2 + case % 3).map(|_| random_probs(&mut rng)).collect();
        let reference = average_probabilities(&members).expect("non-empty");
        for perm in (0..members.len()).permutations(members.len()) {
            let shuffled: Vec<ClassProbabilities> = perm.iter().map(|&i| members[i].clone()).collect();
            if average_probabilities(&shuffled).expect("non-empty") != reference {
                order += 1;
            }
        }
        for c in 0..10 {
            let col = members.iter().map(|m| m.as_slice()[c]);
            let (lo, hi) = col.clone().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(v), h.max(v)));
            let v = reference.as_slice()[c];
            if v < lo || v > hi {
                bounds += 1;
            }
        }
    }
    (order, bounds)
}

/// Seeds (out of 1000, each split mode) whose split is not a partition of a 97-item manifest.
fn split_oracle() -> usize {
    let entries: Vec<ManifestEntry> = (0..97)
        .map(|i| ManifestEntry {
            path: PathBuf::from(format!("clip{i:03}.wav")),
            label: i % 10,
            speaker: None,
        })
        .collect();
    let manifest = DatasetManifest::new("root", entries, 10).expect("valid manifest");
    let all: Vec<&Path> = manifest.entries.iter().map(|e| e.path.as_path()).collect();
    let mut bad = 0;
    for stratified in [false, true] {
        for seed in 0..1000 {
            let split = split_dataset(&manifest, &SplitSpec { stratified, ..SplitSpec::with_seed(seed) }).expect("split");
            let mut seen: Vec<&Path> = [&split.train, &split.val, &split.test]
                .iter()
                .flat_map(|p| p.entries.iter().map(|e| e.path.as_path()))
                .collect();
            seen.sort();
            if seen != all || split.test.len() != 19 || split.val.len() != 8 {
                bad += 1;
            }
        }
    }
    bad
}

fn numerical_oracles() -> Outcome {
    let (fft, parseval) = fft_oracle();
    let dct = dct_oracle();
    let (mel, increasing) = mel_oracle();
    let grad = gradient_oracle();
    let softmax = softmax_oracle();
    let (bn_mean, bn_var) = batchnorm_oracle();
    let dropout = dropout_oracle();
    let (order, bounds) = ensemble_oracle();
    let split = split_oracle();
    let checks = [
        (fft < FFT_REL_TOL, format!("fft vs dft {fft:.1e}")),
        (parseval < FFT_REL_TOL, format!("parseval {parseval:.1e}")),
        (dct < DCT_TOL, format!("dct-ii {dct:.1e}")),
        (mel < MEL_REL_TOL && increasing, format!("hz/mel {mel:.1e}")),
        (grad < GRAD_REL_TOL, format!("cnn gradient {grad:.1e}")),
        (softmax < SOFTMAX_SUM_TOL, format!("softmax sum {softmax:.1e}")),
        (bn_mean < BN_MEAN_TOL && bn_var < BN_VAR_TOL, format!("batchnorm mean {bn_mean:.1e} var {bn_var:.1e}")),
        (dropout < DROPOUT_TOL, format!("rate-0 dropout {dropout:.1e}")),
        (order == 0 && bounds == 0, format!("ensemble order/bound violations {order}/{bounds}")),
        (split == 0, format!("split non-partitions {split}/2000")),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(ok, _)| !ok).map(|(_, d)| d.as_str()).collect();
    let detail = checks.iter().map(|(_, d)| d.as_str()).join("; ");
    if failed.is_empty() {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!("failed: {}; all: {detail}", failed.join(", ")))
    }
}

// ---- table ---------------------------------------------------------------

fn parse_accuracy(cell: &str) -> Option<(f64, f64)> {
    let (m, s) = cell.split_once(" ± ")?;
    let three = |t: &str| t.split_once('.').is_some_and(|(_, d)| d.len() == 3);
    (three(m) && three(s)).then_some((m.parse().ok()?, s.parse().ok()?))
}

fn table_fidelity() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let corpus = SynthSpec {
        per_class: 12,
        ..SynthSpec::default()
    };
    if let Err(e) = write_synth_corpus(dir.path(), &corpus) {
        return Outcome::Fail(e.to_string());
    }
    let mut spec = ExperimentSpec::new(dir.path());
    spec.repeats = 2;
    spec.train.epochs = 3;
    spec.train.batch_size = 4;
    let report = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let expected = [
        "CNN (MS)",
        "CNN (MFCC)",
        "CNN (ZCR)",
        "CNN (MS and MFCC)",
        "CNN (MS and ZCR)",
        "CNN (MFCC and ZCR)",
        "CNN (MS, MFCC, ZCR)",
    ];
    let mut problems = Vec::new();

    let md = emit_table(&report, TableFormat::Markdown);
    let lines: Vec<&str> = md.lines().collect();
    let cells = |line: &str| -> Vec<String> {
        line.trim().trim_matches('|').split('|').map(|c| c.trim().to_string()).collect()
    };
    if lines.first().map(|l| cells(l))
        != Some(vec![
            "Configuration".into(),
            "Accuracy".into(),
            "Inference time (ms)".into(),
            "Extraction time (ms)".into(),
        ])
    {
        problems.push("markdown header".to_string());
    }
    let md_rows: Vec<Vec<String>> = lines.iter().skip(2).map(|l| cells(l)).collect();

    let csv_text = emit_table(&report, TableFormat::Csv);
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let csv_header: Vec<String> = reader.headers().map(|h| h.iter().map(String::from).collect()).unwrap_or_default();
    if csv_header != ["configuration", "accuracy", "infer_time_ms", "extract_time_ms"] {
        problems.push("csv header".to_string());
    }
    let csv_rows: Vec<Vec<String>> = reader
        .records()
        .filter_map(Result::ok)
        .map(|r| r.iter().map(String::from).collect())
        .collect();

    for (name, rows) in [("markdown", &md_rows), ("csv", &csv_rows)] {
        if rows.len() != 7 {
            problems.push(format!("{name}: {} rows", rows.len()));
            continue;
        }
        for ((row, want), stats) in rows.iter().zip(expected).zip(&report.rows) {
            let acc = parse_accuracy(&row[1]);
            let timings: Vec<Option<f64>> = row[2..].iter().map(|c| c.parse::<f64>().ok()).collect();
            if row.len() != 4
                || row[0] != want
                || acc.is_none()
                || row[1] != format_accuracy(stats.accuracy_mean, stats.accuracy_std)
                || timings.iter().any(|t| t.is_none_or(|t| t < 0.0))
            {
                problems.push(format!("{name}: bad row {row:?}"));
            }
        }
    }
    if md_rows != csv_rows {
        problems.push("markdown and csv cells differ".to_string());
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("7 rows parsed back from markdown and csv, e.g. {:?}", md_rows[6])
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let fsdd = fsdd_report();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("fsdd single-feature accuracy", Box::new(|| fsdd_single_feature(&fsdd))),
        ("fsdd zcr far below mfcc", Box::new(|| fsdd_ordering(&fsdd))),
        ("fsdd ms+mfcc ensemble", Box::new(|| fsdd_ensemble(&fsdd))),
        ("synthetic corpus end to end", Box::new(synthetic_end_to_end)),
        ("numerical oracle suite", Box::new(numerical_oracles)),
        ("table fidelity", Box::new(table_fidelity)),
    ];
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for (name, check) in criteria {
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::NotRun(d) => ("NOT RUN", d),
        };
        *tally.entry(tag).or_default() += 1;
        println!("acceptance {tag:<7} {name}: {detail}");
    }
    println!("acceptance summary: {tally:?}");
    if tally.contains_key("FAIL") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
