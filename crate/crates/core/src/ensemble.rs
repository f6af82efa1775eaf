//! Probability-averaging ensembles of per-feature models.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::dsp::{extract_feature, DspConfig, DspError, FeatureKind, FeatureMap};
use crate::nn::{batch_tensor, load_checkpoint, ClassProbabilities, ModelCheckpoint, NnError};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("member {index} has {got} classes, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: checkpoint was trained on {found} features but is declared as {declared}")]
    FeatureKindMismatch {
        path: PathBuf,
        declared: FeatureKind,
        found: FeatureKind,
    },
    #[error("invalid ensemble spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: NnError,
    },
    #[error(transparent)]
    Model(#[from] NnError),
    #[error(transparent)]
    Feature(#[from] DspError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Elementwise mean of the member distributions.
///
/// Each class is computed as its smallest member value plus the mean offset
/// from it, summed in ascending order: the result does not depend on member
/// order and equal members give back their value exactly.
pub fn average_probabilities(ps: &[ClassProbabilities]) -> Result<ClassProbabilities, EnsembleError> {
    let first = ps.first().ok_or(EnsembleError::EmptyEnsemble)?;
    let classes = first.len();
    if let Some((index, p)) = ps.iter().enumerate().find(|(_, p)| p.len() != classes) {
        return Err(EnsembleError::LengthMismatch {
            index,
            expected: classes,
            got: p.len(),
        });
    }
    let n = ps.len() as f64;
    let mut column = Vec::with_capacity(ps.len());
    let mean = (0..classes)
        .map(|c| {
            column.clear();
            column.extend(ps.iter().map(|p| p.as_slice()[c]));
            column.sort_by(f64::total_cmp);
            let (lo, hi) = (column[0], column[column.len() - 1]);
            let offset = column.iter().map(|v| v - lo).sum::<f64>() / n;
            (lo + offset).clamp(lo, hi)
        })
        .collect();
    Ok(ClassProbabilities::new(mean)?)
}

/// Argmax with ties going to the lowest class index.
pub fn predict_label(p: &ClassProbabilities) -> usize {
    p.argmax()
}

/// Member list as stored on disk:
///
/// ```toml
/// [[members]]
/// checkpoint = "ms.ckpt"
/// feature = "MS"
/// ```
///
/// Relative checkpoint paths resolve against the spec file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub members: Vec<MemberSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub checkpoint: PathBuf,
    pub feature: FeatureKind,
}

impl EnsembleSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, EnsembleError> {
        let spec: Self = toml::from_str(text).map_err(|e| EnsembleError::Spec(e.to_string()))?;
        if spec.members.is_empty() {
            return Err(EnsembleError::EmptyEnsemble);
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("ensemble spec serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, EnsembleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EnsembleError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for m in &mut spec.members {
            if m.checkpoint.is_relative() {
                m.checkpoint = base.join(&m.checkpoint);
            }
        }
        Ok(spec)
    }
}

/// Loaded member models in canonical feature order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<ModelCheckpoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub label: usize,
    pub probabilities: ClassProbabilities,
    pub member_probabilities: Vec<(FeatureKind, ClassProbabilities)>,
    /// Feature extraction for every distinct member feature.
    pub extract_time: Duration,
    /// Member forward passes plus averaging.
    pub infer_time: Duration,
}

impl Ensemble {
    pub fn new(mut members: Vec<ModelCheckpoint>) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::EmptyEnsemble);
        }
        members.sort_by_key(|m| m.feature_kind);
        Ok(Self { members })
    }

    /// Loads every member, checking it was trained on its declared feature.
    pub fn load(spec: &EnsembleSpec) -> Result<Self, EnsembleError> {
        let members = spec
            .members
            .iter()
            .map(|m| {
                let ckpt = load_checkpoint(&m.checkpoint).map_err(|source| EnsembleError::Checkpoint {
                    path: m.checkpoint.clone(),
                    source,
                })?;
                if ckpt.feature_kind != m.feature {
                    return Err(EnsembleError::FeatureKindMismatch {
                        path: m.checkpoint.clone(),
                        declared: m.feature,
                        found: ckpt.feature_kind,
                    });
                }
                Ok(ckpt)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(members)
    }

    pub fn members(&self) -> &[ModelCheckpoint] {
        &self.members
    }

    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        self.members.iter().map(|m| m.feature_kind).collect()
    }

    /// Runs every member on its own feature map and averages.
    pub fn predict_maps(
        &self,
        maps: &BTreeMap<FeatureKind, FeatureMap>,
    ) -> Result<(ClassProbabilities, Vec<ClassProbabilities>), EnsembleError> {
        let member_probs = self
            .members
            .iter()
            .map(|m| {
                let map = maps.get(&m.feature_kind).ok_or_else(|| {
                    EnsembleError::Spec(format!("no {} feature map supplied", m.feature_kind))
                })?;
                let out = m.network.predict(batch_tensor(&[map]))?;
                Ok(ClassProbabilities::from_batch(&out)?.remove(0))
            })
            .collect::<Result<Vec<_>, EnsembleError>>()?;
        Ok((average_probabilities(&member_probs)?, member_probs))
    }

    /// Extracts each member's feature from `clip`, runs the members in eval
    /// mode and averages. The clip is used as given.
    pub fn predict(&self, clip: &AudioClip, dsp: &DspConfig) -> Result<EnsemblePrediction, EnsembleError> {
        let started = Instant::now();
        let mut maps = BTreeMap::new();
        for kind in self.feature_kinds() {
            if !maps.contains_key(&kind) {
                maps.insert(kind, extract_feature(kind, clip, dsp)?);
            }
        }
        let extract_time = started.elapsed();

        let started = Instant::now();
        let (probabilities, member_probs) = self.predict_maps(&maps)?;
        let infer_time = started.elapsed();
        Ok(EnsemblePrediction {
            label: predict_label(&probabilities),
            probabilities,
            member_probabilities: self.feature_kinds().into_iter().zip(member_probs).collect(),
            extract_time,
            infer_time,
        })
    }
}

/// One-shot form of [`Ensemble::predict`].
pub fn ensemble_predict(
    ensemble: &Ensemble,
    clip: &AudioClip,
    dsp: &DspConfig,
) -> Result<EnsemblePrediction, EnsembleError> {
    ensemble.predict(clip, dsp)
}
