//! Feature extraction: every extractor turns a fixed-duration clip into a
//! 32x32 single-channel [`FeatureMap`].

mod config;
mod features;
mod fft;
mod map;
mod mel;

pub use config::{DspConfig, DspSettings, Window};
pub use features::{
    dct_ii_orthonormal, extract_feature, frame_signal, log_mel_energies, mel_spectrogram, mfcc,
    mfcc_coefficients, zcr, zcr_sequence, zero_crossing_rate, FeatureKind,
};
pub use fft::{fft_in_place, power_spectrum, SpectrumAnalyzer};
pub use map::{normalize_map, resize_to_map, FeatureMap, Matrix, MAP_SIDE};
pub use mel::{build_mel_filterbank, cached_filterbank, hz_to_mel, mel_to_hz, MelFilterbank};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("signal of {len} samples is shorter than one {frame_len}-sample frame")]
    SignalTooShort { len: usize, frame_len: usize },
    #[error("frame has {got} samples, expected {expected}")]
    BadFrameLength { got: usize, expected: usize },
    #[error("invalid DSP configuration: {0}")]
    Config(String),
    #[error("invalid feature map: {0}")]
    InvalidMap(String),
    #[error("feature map I/O: {0}")]
    Io(#[from] std::io::Error),
}
