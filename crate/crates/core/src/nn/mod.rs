//! Small convolutional network engine with hand-written backpropagation.
//!
//! Activations are NHWC tensors. The engine is generic over [`Scalar`] so the
//! same layers train in `f32` and are gradient-checked in `f64`.

mod checkpoint;
mod layers;
mod network;
mod probs;
mod tensor;
mod train;


pub use checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint};
pub use layers::{Layer, LayerCache, Mode};
pub use network::{build_table1_cnn, Grads, LayerSpec, ModelSpec, Network};
pub use probs::{batch_cross_entropy, cross_entropy_loss, one_hot, ClassProbabilities};
pub use tensor::{matmul, Scalar, Tensor};
pub use train::{
    accuracy_on, batch_tensor, predict_batch, train, train_with_progress, EpochRecord, Example,
    Optimizer, OptimizerKind, TrainConfig,
};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Generator used for initialization, shuffling and dropout masks.
pub type NnRng = ChaCha8Rng;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient in layer {layer} ({param})")]
    NonFiniteGradient { layer: usize, param: &'static str },
    #[error("non-finite loss {0}")]
    NonFiniteLoss(f64),
    #[error("dataset is empty: {0}")]
    EmptyDataset(&'static str),
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}
