//! Audio ingestion: WAV decoding, fixed-duration clips, labeled corpora on
//! disk and seeded train/validation/test splits.

mod clip;
mod dataset;
mod split;
mod wav;

pub use clip::{fix_duration, AudioClip};
pub use dataset::{load_dataset, DatasetLayout, DatasetManifest, ManifestEntry, CLASS_COUNT};
pub use split::{split_dataset, DatasetSplit, SplitSpec};
pub use wav::{encode_wav, parse_wav, read_wav, write_wav};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("no WAV files found under {0}")]
    EmptyDataset(PathBuf),
    #[error("cannot derive a class label for {0}")]
    UnlabeledFile(PathBuf),
    #[error("duplicate manifest path {0}")]
    DuplicatePath(PathBuf),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("class {class} has {count} items, stratified splitting needs at least 3")]
    ClassTooSmall { class: usize, count: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<AudioError>,
    },
}
