use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use fnv::FnvHasher;
use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{accuracy, HarnessError, MetricsReport, RunRecord};
use crate::audio_io::{
    fix_duration, load_dataset, split_dataset, AudioClip, DatasetLayout, DatasetManifest, ManifestEntry,
    SplitSpec,
};
use crate::dsp::{extract_feature, DspSettings, FeatureKind, FeatureMap};
use crate::ensemble::{average_probabilities, predict_label};
use crate::nn::{
    batch_tensor, build_table1_cnn, train_with_progress, ClassProbabilities, EpochRecord, Example,
    ModelCheckpoint, TrainConfig,
};

/// Overrides the configured feature cache directory.
pub const CACHE_DIR_ENV: &str = "AUDIO_ENSEMBLE_CACHE_DIR";

fn all_features() -> Vec<FeatureKind> {
    FeatureKind::ALL.to_vec()
}

fn default_repeats() -> usize {
    3
}

fn default_duration() -> f64 {
    2.0
}

/// A full experiment, read from TOML:
///
/// ```toml
/// dataset = "data/fsdd"
/// layout = "fsdd"
/// features = ["MS", "MFCC", "ZCR"]
/// repeats = 3
/// seed = 0
///
/// [dsp]
/// n_mels = 40
///
/// [train]
/// epochs = 150
/// ```
///
/// Repeat `r` seeds the split and every model with `seed + r`; the `seed`
/// fields inside `[train]` and `[split]` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    #[serde(default)]
    pub layout: DatasetLayout,
    #[serde(default = "all_features")]
    pub features: Vec<FeatureKind>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    /// Clip length in seconds after padding or truncation.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub dsp: DspSettings,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitSpec,
}

impl ExperimentSpec {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            layout: DatasetLayout::default(),
            features: all_features(),
            repeats: default_repeats(),
            seed: 0,
            duration: default_duration(),
            cache_dir: None,
            dsp: DspSettings::default(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut spec = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if spec.dataset.is_relative() {
            spec.dataset = base.join(&spec.dataset);
        }
        if let Some(dir) = spec.cache_dir.as_mut().filter(|d| d.is_relative()) {
            *dir = base.join(&*dir);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repeats == 0 {
            return Err(HarnessError::Config("repeats must be at least 1".into()));
        }
        if self.features.is_empty() {
            return Err(HarnessError::Config("feature set is empty".into()));
        }
        if self.features.iter().duplicates().next().is_some() {
            return Err(HarnessError::Config(format!("duplicate features in {:?}", self.features)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(HarnessError::Config(format!("duration {} must be positive", self.duration)));
        }
        self.train.validate()?;
        self.split.validate()?;
        Ok(())
    }

    /// Features in canonical order (MS, MFCC, ZCR).
    pub fn canonical_features(&self) -> Vec<FeatureKind> {
        let mut f = self.features.clone();
        f.sort();
        f
    }

    /// The cache directory, with the environment override applied.
    pub fn effective_cache_dir(&self) -> Option<PathBuf> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.cache_dir.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Progress<'a> {
    Features { done: usize, total: usize },
    Epoch {
        repeat: usize,
        feature: FeatureKind,
        record: &'a EpochRecord,
    },
    RepeatDone { repeat: usize, of: usize },
}

/// One model's per-sample outputs on an evaluation set.
#[derive(Debug, Clone)]
pub struct MemberOutputs {
    pub kind: FeatureKind,
    pub probabilities: Vec<ClassProbabilities>,
    /// Mean per-sample forward pass time.
    pub infer_ms: f64,
    /// Mean per-sample feature extraction time.
    pub extract_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResult {
    pub members: Vec<FeatureKind>,
    pub accuracy: f64,
    /// Member forward passes plus averaging, per sample.
    pub infer_ms: f64,
    pub extract_ms: f64,
    pub probabilities: Vec<ClassProbabilities>,
}

/// Scores every non-empty subset of `members`: singles, then pairs, and so
/// on, each size in lexicographic member order.
pub fn evaluate_subsets(members: &[MemberOutputs], labels: &[usize]) -> Result<Vec<SubsetResult>, HarnessError> {
    if let Some(m) = members.iter().find(|m| m.probabilities.len() != labels.len()) {
        return Err(HarnessError::LengthMismatch {
            predictions: m.probabilities.len(),
            labels: labels.len(),
        });
    }
    let mut results = Vec::new();
    for size in 1..=members.len() {
        for combo in (0..members.len()).combinations(size) {
            let chosen: Vec<&MemberOutputs> = combo.iter().map(|&i| &members[i]).collect();
            let (probabilities, avg_ms) = if size == 1 {
                (chosen[0].probabilities.clone(), 0.0)
            } else {
                let started = Instant::now();
                let probs = (0..labels.len())
                    .map(|s| {
                        let ps: Vec<ClassProbabilities> =
                            chosen.iter().map(|m| m.probabilities[s].clone()).collect();
                        average_probabilities(&ps)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let per_sample = started.elapsed().as_secs_f64() * 1e3 / labels.len().max(1) as f64;
                (probs, per_sample)
            };
            let predictions: Vec<usize> = probabilities.iter().map(predict_label).collect();
            results.push(SubsetResult {
                members: chosen.iter().map(|m| m.kind).collect(),
                accuracy: accuracy(&predictions, labels)?,
                infer_ms: chosen.iter().map(|m| m.infer_ms).sum::<f64>() + avg_ms,
                extract_ms: chosen.iter().map(|m| m.extract_ms).sum(),
                probabilities,
            });
        }
    }
    Ok(results)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricsReport, HarnessError> {
    run_experiment_with_progress(spec, |_| {})
}

/// Loads and featurizes the dataset once, then for every repeat splits,
/// trains one model per feature and scores every feature subset on the test
/// split. Test features are extracted afresh so extraction can be timed.
pub fn run_experiment_with_progress(
    spec: &ExperimentSpec,
    mut progress: impl FnMut(Progress<'_>),
) -> Result<MetricsReport, HarnessError> {
    spec.validate()?;
    let features = spec.canonical_features();
    let manifest = load_dataset(&spec.dataset, spec.layout)?;
    let store = FeatureStore::new(spec);
    let maps = store.featurize(&manifest, &features, &mut progress)?;

    let mut runs = Vec::with_capacity(spec.repeats);
    for repeat in 0..spec.repeats {
        match run_repeat(spec, &manifest, &features, &maps, repeat, &mut progress) {
            Ok(run) => runs.push(run),
            Err(e) => {
                let completed = runs.len();
                let report = MetricsReport::from_runs(features, runs, Some(e.to_string()));
                return Err(HarnessError::Partial {
                    report: Box::new(report),
                    completed,
                    requested: spec.repeats,
                    source: Box::new(e),
                });
            }
        }
        progress(Progress::RepeatDone {
            repeat,
            of: spec.repeats,
        });
    }
    Ok(MetricsReport::from_runs(features, runs, None))
}

fn run_repeat(
    spec: &ExperimentSpec,
    manifest: &DatasetManifest,
    features: &[FeatureKind],
    maps: &BTreeMap<FeatureKind, Vec<FeatureMap>>,
    repeat: usize,
    progress: &mut impl FnMut(Progress<'_>),
) -> Result<RunRecord, HarnessError> {
    let seed = spec.seed.wrapping_add(repeat as u64);
    let split = split_dataset(manifest, &SplitSpec { seed, ..spec.split })?;
    let index: HashMap<&Path, usize> = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.path.as_path(), i))
        .collect();
    let examples = |kind: FeatureKind, part: &DatasetManifest| -> Vec<Example> {
        part.entries
            .iter()
            .map(|e| Example {
                map: maps[&kind][index[e.path.as_path()]].clone(),
                label: e.label,
            })
            .collect()
    };

    let train_cfg = TrainConfig {
        seed,
        ..spec.train.clone()
    };
    // One thread per feature; results do not depend on scheduling.
    let (tx, rx) = mpsc::channel::<(FeatureKind, EpochRecord)>();
    let models = thread::scope(|s| {
        let handles: Vec<_> = features
            .iter()
            .map(|&kind| {
                let (train, val) = (examples(kind, &split.train), examples(kind, &split.val));
                let (tx, cfg) = (tx.clone(), &train_cfg);
                s.spawn(move || {
                    train_with_progress(&build_table1_cnn(), &train, &val, cfg, kind, |record| {
                        let _ = tx.send((kind, record.clone()));
                    })
                })
            })
            .collect();
        drop(tx);
        for (feature, record) in rx {
            progress(Progress::Epoch {
                repeat,
                feature,
                record: &record,
            });
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let test = &split.test.entries;
    let labels: Vec<usize> = test.iter().map(|e| e.label).collect();
    let mut extract_ms = vec![0.0; features.len()];
    let mut test_maps: Vec<Vec<FeatureMap>> = vec![Vec::with_capacity(test.len()); features.len()];
    for entry in test {
        let clip = load_clip(entry, spec.duration)?;
        for (k, &kind) in features.iter().enumerate() {
            let started = Instant::now();
            let map = extract(kind, &clip, &spec.dsp)?;
            extract_ms[k] += started.elapsed().as_secs_f64() * 1e3;
            test_maps[k].push(map);
        }
    }

    let mut members = Vec::with_capacity(features.len());
    for ((model, maps), extract_total) in models.iter().zip(&test_maps).zip(extract_ms) {
        let (probabilities, infer_ms) = predict_each(model, maps)?;
        members.push(MemberOutputs {
            kind: model.feature_kind,
            probabilities,
            infer_ms,
            extract_ms: extract_total / test.len() as f64,
        });
    }

    Ok(RunRecord {
        repeat,
        seed,
        sample_ids: test.iter().map(|e| sample_id(&manifest.root, &e.path)).collect(),
        labels: labels.clone(),
        subsets: evaluate_subsets(&members, &labels)?,
        curves: models.iter().map(|m| (m.feature_kind, m.history.clone())).collect(),
        models,
    })
}

/// Eval-mode probabilities one sample at a time, with the mean forward time in ms.
pub(crate) fn predict_each(
    model: &ModelCheckpoint,
    maps: &[FeatureMap],
) -> Result<(Vec<ClassProbabilities>, f64), HarnessError> {
    let mut total = 0.0;
    let mut out = Vec::with_capacity(maps.len());
    for map in maps {
        let started = Instant::now();
        let probs = model.network.predict(batch_tensor(&[map]))?;
        total += started.elapsed().as_secs_f64() * 1e3;
        out.push(ClassProbabilities::from_batch(&probs)?.remove(0));
    }
    Ok((out, total / maps.len().max(1) as f64))
}

pub(crate) fn sample_id(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

pub(crate) fn load_clip(entry: &ManifestEntry, duration: f64) -> Result<AudioClip, HarnessError> {
    Ok(fix_duration(&entry.load()?, duration))
}

/// Network input for `kind`, rounded to the 32-bit precision the cache stores.
pub(crate) fn extract(kind: FeatureKind, clip: &AudioClip, dsp: &DspSettings) -> Result<FeatureMap, HarnessError> {
    let cfg = dsp.resolve(clip.sample_rate());
    cfg.validate(clip.sample_rate())?;
    Ok(extract_feature(kind, clip, &cfg)?.quantized())
}

struct FeatureStore {
    dir: Option<PathBuf>,
    settings_key: String,
    dsp: DspSettings,
    duration: f64,
}

impl FeatureStore {
    fn new(spec: &ExperimentSpec) -> Self {
        Self {
            dir: spec.effective_cache_dir(),
            settings_key: serde_json::to_string(&(&spec.dsp, spec.duration)).expect("settings serialize"),
            dsp: spec.dsp.clone(),
            duration: spec.duration,
        }
    }

    /// Cache file for one clip and feature. The key covers the DSP settings,
    /// clip length, source path, size and modification time.
    fn path(&self, dir: &Path, kind: FeatureKind, entry: &ManifestEntry) -> PathBuf {
        let mut h = FnvHasher::default();
        h.write(self.settings_key.as_bytes());
        h.write(entry.path.to_string_lossy().as_bytes());
        if let Ok(meta) = fs::metadata(&entry.path) {
            h.write_u64(meta.len());
            if let Ok(modified) = meta.modified() {
                if let Ok(since) = modified.duration_since(std::time::UNIX_EPOCH) {
                    h.write_u128(since.as_nanos());
                }
            }
        }
        dir.join(kind.name()).join(format!("{:016x}.fmap", h.finish()))
    }

    fn featurize(
        &self,
        manifest: &DatasetManifest,
        features: &[FeatureKind],
        progress: &mut impl FnMut(Progress<'_>),
    ) -> Result<BTreeMap<FeatureKind, Vec<FeatureMap>>, HarnessError> {
        if let Some(dir) = &self.dir {
            for kind in features {
                let sub = dir.join(kind.name());
                fs::create_dir_all(&sub).map_err(HarnessError::io(sub))?;
            }
        }
        let mut out: BTreeMap<FeatureKind, Vec<FeatureMap>> =
            features.iter().map(|&k| (k, Vec::with_capacity(manifest.len()))).collect();
        for (done, entry) in manifest.entries.iter().enumerate() {
            let mut clip = None;
            for &kind in features {
                let cached = self.dir.as_ref().map(|d| self.path(d, kind, entry));
                let hit = cached.as_ref().and_then(|p| FeatureMap::load(p).ok());
                let map = match hit {
                    Some(map) => map,
                    None => {
                        if clip.is_none() {
                            clip = Some(load_clip(entry, self.duration)?);
                        }
                        let map = extract(kind, clip.as_ref().unwrap(), &self.dsp)?;
                        if let Some(p) = &cached {
                            map.save(p)?;
                        }
                        map
                    }
                };
                out.get_mut(&kind).unwrap().push(map);
            }
            progress(Progress::Features {
                done: done + 1,
                total: manifest.len(),
            });
        }
        Ok(out)
    }
}
