//! Experiment runner, report writers, synthetic corpus and command line.

mod cli;
mod experiment;
mod report;
mod synth;

pub use cli::cli_main;
pub use experiment::{
    evaluate_subsets, run_experiment, run_experiment_with_progress, ExperimentSpec, MemberOutputs,
    Progress, SubsetResult, CACHE_DIR_ENV,
};
pub use report::{
    emit_curves, emit_table, emit_table_with, format_accuracy, read_probability_dump, subset_label,
    subset_slug, write_probability_dumps, ConfigRow, DumpRow, MetricsReport, RunRecord, TableFormat,
};
pub use synth::{synth_clip, write_synth_corpus, SynthSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::audio_io::AudioError;
use crate::dsp::DspError;
use crate::ensemble::EnsembleError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Model(#[from] NnError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no predictions to score")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("experiment stopped after {completed} of {requested} repeats: {source}")]
    Partial {
        report: Box<MetricsReport>,
        completed: usize,
        requested: usize,
        #[source]
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

/// Fraction of positions where prediction and label agree.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64, HarnessError> {
    if predictions.len() != labels.len() {
        return Err(HarnessError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}
