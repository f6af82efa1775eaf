use std::collections::BTreeMap;
use std::error::Error as _;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::experiment::{extract, load_clip, predict_each, sample_id};
use super::{
    emit_curves, emit_table_with, evaluate_subsets, run_experiment_with_progress, write_probability_dumps,
    write_synth_corpus, ExperimentSpec, HarnessError, MemberOutputs, MetricsReport, Progress, RunRecord,
    SynthSpec, TableFormat,
};
use crate::audio_io::{load_dataset, split_dataset, DatasetLayout, DatasetManifest, SplitSpec};
use crate::dsp::{DspSettings, FeatureKind, FeatureMap};
use crate::ensemble::{Ensemble, EnsembleSpec};
use crate::nn::{
    build_table1_cnn, load_checkpoint, save_checkpoint, train_with_progress, Example, ModelCheckpoint,
    OptimizerKind, TrainConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "audio-ensemble",
    version,
    about = "Spoken-digit classification with per-feature CNNs and probability-averaging ensembles",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract feature maps for every clip of a dataset and store them
    Extract(ExtractArgs),
    /// Train the CNN on one feature and save the checkpoint
    Train(TrainArgs),
    /// Score checkpoints and every ensemble of them on a dataset
    Evaluate(EvaluateArgs),
    /// Run a full experiment described by a config file
    Experiment(ExperimentArgs),
    /// Generate the synthetic tone corpus
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset root directory
    #[arg(long)]
    dataset: PathBuf,
    /// fsdd (`<digit>_<speaker>_<index>.wav`) or folder-per-class (`<class>/<file>.wav`)
    #[arg(long, default_value = "fsdd")]
    layout: DatasetLayout,
    /// Clip length in seconds after padding or truncation
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    /// TOML file overriding DSP settings (frame_len, hop_len, n_fft, n_mels, ...)
    #[arg(long)]
    dsp: Option<PathBuf>,
}

impl DatasetArgs {
    fn manifest(&self) -> Result<DatasetManifest, HarnessError> {
        Ok(load_dataset(&self.dataset, self.layout)?)
    }

    fn dsp_settings(&self) -> Result<DspSettings, HarnessError> {
        match &self.dsp {
            None => Ok(DspSettings::default()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
                toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Feature to extract; repeat for several (default: MS, MFCC and ZCR)
    #[arg(long = "feature")]
    features: Vec<FeatureKind>,
    /// Output directory; maps go to `<out>/<FEATURE>/<clip>.fmap`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Seed for the split (and for training)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep class proportions equal across splits
    #[arg(long)]
    stratified: bool,
}

impl SplitArgs {
    fn spec(&self) -> SplitSpec {
        SplitSpec {
            stratified: self.stratified,
            ..SplitSpec::with_seed(self.seed)
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Feature the model is trained on
    #[arg(long)]
    feature: FeatureKind,
    /// Checkpoint path to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Use SGD with this momentum instead of plain SGD
    #[arg(long)]
    momentum: Option<f64>,
    /// Also write the per-epoch curve as CSV
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Table format: markdown or csv
    #[arg(long, default_value = "markdown")]
    format: TableFormat,
    /// Print "-" instead of wall-clock timings so output is reproducible
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Checkpoint to score; repeat for several
    #[arg(long = "checkpoint")]
    checkpoints: Vec<PathBuf>,
    /// TOML ensemble spec listing member checkpoints
    #[arg(long)]
    ensemble: Option<PathBuf>,
    /// Score every clip instead of the held-out test split
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    output: OutputArgs,
    /// Write the table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-sample probability dumps
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
    /// Directory for the report, curves and probability dumps
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every trained checkpoint under `<out>/models`
    #[arg(long, requires = "out")]
    save_models: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 30)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (program name first) and runs the command. Returns 0 on
/// success, 1 on a failed command and 2 on a usage error.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            1
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Extract(a) => extract_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn features_or_all(mut features: Vec<FeatureKind>) -> Vec<FeatureKind> {
    if features.is_empty() {
        features = FeatureKind::ALL.to_vec();
    }
    features.sort();
    features.dedup();
    features
}

fn extract_cmd(a: ExtractArgs) -> Result<(), HarnessError> {
    let manifest = a.data.manifest()?;
    let dsp = a.data.dsp_settings()?;
    let features = features_or_all(a.features);
    let mut written = 0;
    for entry in &manifest.entries {
        let clip = load_clip(entry, a.data.duration)?;
        let id = sample_id(&manifest.root, &entry.path);
        for &kind in &features {
            let path = a.out.join(kind.name()).join(Path::new(&id).with_extension("fmap"));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(HarnessError::io(parent))?;
            }
            extract(kind, &clip, &dsp)?.save(&path)?;
            written += 1;
        }
    }
    println!("wrote {written} feature maps for {} clips to {}", manifest.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<(), HarnessError> {
    let manifest = a.data.manifest()?;
    let dsp = a.data.dsp_settings()?;
    let split = split_dataset(&manifest, &a.split.spec())?;
    let examples = |part: &DatasetManifest| -> Result<Vec<Example>, HarnessError> {
        part.entries
            .iter()
            .map(|e| {
                let clip = load_clip(e, a.data.duration)?;
                Ok(Example {
                    map: extract(a.feature, &clip, &dsp)?,
                    label: e.label,
                })
            })
            .collect()
    };
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: a.epochs.unwrap_or(defaults.epochs),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        seed: a.split.seed,
        optimizer: a
            .momentum
            .map_or(OptimizerKind::Sgd, |momentum| OptimizerKind::SgdMomentum { momentum }),
    };
    let (train, val) = (examples(&split.train)?, examples(&split.val)?);
    let ckpt = train_with_progress(&build_table1_cnn(), &train, &val, &cfg, a.feature, |r| {
        if !a.quiet {
            eprintln!(
                "{} epoch {}/{}: loss {:.4}, val accuracy {:.4}",
                a.feature, r.epoch, cfg.epochs, r.train_loss, r.val_accuracy
            );
        }
    })?;
    save_checkpoint(&ckpt, &a.out)?;
    if let Some(path) = &a.curves {
        let dir = tempfile_free_dir(path)?;
        let report = MetricsReport::from_runs(
            vec![a.feature],
            vec![RunRecord {
                repeat: 0,
                seed: a.split.seed,
                sample_ids: vec![],
                labels: vec![],
                subsets: vec![],
                curves: vec![(a.feature, ckpt.history.clone())],
                models: vec![],
            }],
            None,
        );
        let written = emit_curves(&report, &dir)?;
        fs::rename(&written[0], path).map_err(HarnessError::io(path))?;
        let _ = fs::remove_dir(&dir);
    }
    let best = ckpt
        .history
        .iter()
        .fold(None::<&crate::nn::EpochRecord>, |b, r| match b {
            Some(b) if b.val_accuracy >= r.val_accuracy => Some(b),
            _ => Some(r),
        })
        .expect("at least one epoch");
    println!(
        "saved {} model to {} (best validation accuracy {:.4} at epoch {})",
        a.feature,
        a.out.display(),
        best.val_accuracy,
        best.epoch
    );
    Ok(())
}

/// A scratch directory next to `path` for writers that produce directory trees.
fn tempfile_free_dir(path: &Path) -> Result<PathBuf, HarnessError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let dir = parent.join(format!(
        ".{}.parts",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    Ok(dir)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), HarnessError> {
    let mut models: Vec<ModelCheckpoint> = a
        .checkpoints
        .iter()
        .map(|p| {
            load_checkpoint(p).map_err(|source| {
                HarnessError::Ensemble(crate::ensemble::EnsembleError::Checkpoint {
                    path: p.clone(),
                    source,
                })
            })
        })
        .collect::<Result<_, _>>()?;
    if let Some(path) = &a.ensemble {
        models.extend(Ensemble::load(&EnsembleSpec::read(path)?)?.members().iter().cloned());
    }
    if models.is_empty() {
        return Err(HarnessError::Config("give at least one --checkpoint or an --ensemble".into()));
    }
    models.sort_by_key(|m| m.feature_kind);

    let manifest = a.data.manifest()?;
    let dsp = a.data.dsp_settings()?;
    let entries = if a.all {
        manifest.entries.clone()
    } else {
        split_dataset(&manifest, &a.split.spec())?.test.entries
    };
    let kinds = features_or_all(models.iter().map(|m| m.feature_kind).collect());
    let mut maps: BTreeMap<FeatureKind, Vec<FeatureMap>> = BTreeMap::new();
    let mut extract_ms: BTreeMap<FeatureKind, f64> = BTreeMap::new();
    for entry in &entries {
        let clip = load_clip(entry, a.data.duration)?;
        for &kind in &kinds {
            let started = Instant::now();
            let map = extract(kind, &clip, &dsp)?;
            *extract_ms.entry(kind).or_default() += started.elapsed().as_secs_f64() * 1e3;
            maps.entry(kind).or_default().push(map);
        }
    }
    let members = models
        .iter()
        .map(|m| {
            let (probabilities, infer_ms) = predict_each(m, &maps[&m.feature_kind])?;
            Ok(MemberOutputs {
                kind: m.feature_kind,
                probabilities,
                infer_ms,
                extract_ms: extract_ms[&m.feature_kind] / entries.len() as f64,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let labels: Vec<usize> = entries.iter().map(|e| e.label).collect();
    let run = RunRecord {
        repeat: 0,
        seed: a.split.seed,
        sample_ids: entries.iter().map(|e| sample_id(&manifest.root, &e.path)).collect(),
        labels: labels.clone(),
        subsets: evaluate_subsets(&members, &labels)?,
        curves: vec![],
        models: vec![],
    };
    let report = MetricsReport::from_runs(models.iter().map(|m| m.feature_kind).collect(), vec![run], None);
    if let Some(dir) = &a.dump {
        write_probability_dumps(&report, dir)?;
    }
    let table = emit_table_with(&report, a.output.format, a.output.omit_timing);
    match &a.out {
        Some(path) => fs::write(path, table).map_err(HarnessError::io(path)),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn experiment_cmd(a: ExperimentArgs) -> Result<(), HarnessError> {
    let mut spec = ExperimentSpec::read(&a.config)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(repeats) = a.repeats {
        spec.repeats = repeats;
    }
    if let Some(epochs) = a.epochs {
        spec.train.epochs = epochs;
    }
    let epochs = spec.train.epochs;
    let quiet = a.quiet;
    let outcome = run_experiment_with_progress(&spec, |p| {
        if quiet {
            return;
        }
        match p {
            Progress::Features { done, total } if done == total || done % 500 == 0 => {
                eprintln!("features: {done}/{total} clips")
            }
            Progress::Epoch {
                repeat,
                feature,
                record,
            } => eprintln!(
                "repeat {} {feature} epoch {}/{epochs}: loss {:.4}, val accuracy {:.4}",
                repeat + 1,
                record.epoch,
                record.train_loss,
                record.val_accuracy
            ),
            Progress::RepeatDone { repeat, of } => eprintln!("finished repeat {}/{of}", repeat + 1),
            _ => {}
        }
    });
    let (report, failure) = match outcome {
        Ok(report) => (report, None),
        Err(HarnessError::Partial { report, source, .. }) => (*report, Some(*source)),
        Err(e) => return Err(e),
    };

    let table = emit_table_with(&report, a.output.format, a.output.omit_timing);
    print!("{table}");
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(HarnessError::io(out))?;
        let ext = match a.output.format {
            TableFormat::Csv => "csv",
            TableFormat::Markdown => "md",
        };
        let path = out.join(format!("report.{ext}"));
        fs::write(&path, &table).map_err(HarnessError::io(&path))?;
        emit_curves(&report, out.join("curves"))?;
        write_probability_dumps(&report, out.join("probabilities"))?;
        if a.save_models {
            let dir = out.join("models");
            fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
            for run in &report.runs {
                for m in &run.models {
                    save_checkpoint(m, dir.join(format!("run{}_{}.ckpt", run.repeat, m.feature_kind)))?;
                }
            }
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn synth_cmd(a: SynthArgs) -> Result<(), HarnessError> {
    let spec = SynthSpec {
        classes: a.classes,
        per_class: a.per_class,
        seed: a.seed,
        ..SynthSpec::default()
    };
    let paths = write_synth_corpus(&a.out, &spec)?;
    println!("wrote {} clips to {}", paths.len(), a.out.display());
    Ok(())
}
