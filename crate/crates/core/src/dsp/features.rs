use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    cached_filterbank, normalize_map, resize_to_map, DspConfig, DspError, FeatureMap, Matrix,
    SpectrumAnalyzer,
};
use crate::audio_io::AudioClip;

/// One of the three per-clip representations a model can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "MFCC")]
    Mfcc,
    #[serde(rename = "ZCR")]
    Zcr,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Ms, FeatureKind::Mfcc, FeatureKind::Zcr];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Ms => "MS",
            FeatureKind::Mfcc => "MFCC",
            FeatureKind::Zcr => "ZCR",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MS" | "MEL" => Ok(FeatureKind::Ms),
            "MFCC" => Ok(FeatureKind::Mfcc),
            "ZCR" => Ok(FeatureKind::Zcr),
            _ => Err(format!("unknown feature '{s}' (expected MS, MFCC or ZCR)")),
        }
    }
}

/// Frame `t` covers `[t*hop, t*hop + frame_len)`; a trailing partial frame is dropped.
pub fn frame_signal<'a>(samples: &'a [f64], cfg: &DspConfig) -> Result<Vec<&'a [f64]>, DspError> {
    if cfg.frame_len == 0 || cfg.hop_len == 0 {
        return Err(DspError::Config("frame_len and hop_len must be positive".into()));
    }
    if samples.len() < cfg.frame_len {
        return Err(DspError::SignalTooShort {
            len: samples.len(),
            frame_len: cfg.frame_len,
        });
    }
    let count = (samples.len() - cfg.frame_len) / cfg.hop_len + 1;
    Ok((0..count)
        .map(|t| &samples[t * cfg.hop_len..t * cfg.hop_len + cfg.frame_len])
        .collect())
}

/// Natural-log mel energies, `n_mels x n_frames`.
pub fn log_mel_energies(clip: &AudioClip, cfg: &DspConfig) -> Result<Matrix, DspError> {
    cfg.validate(clip.sample_rate())?;
    let filterbank = cached_filterbank(clip.sample_rate(), cfg)?;
    let frames = frame_signal(clip.samples(), cfg)?;
    let mut analyzer = SpectrumAnalyzer::new(cfg);
    let mut power = vec![0.0; analyzer.n_bins()];
    let mut bands = vec![0.0; cfg.n_mels];
    let mut out = Matrix::zeros(cfg.n_mels, frames.len());
    for (t, frame) in frames.iter().enumerate() {
        analyzer.power_into(frame, &mut power)?;
        filterbank.apply(&power, &mut bands);
        for (m, &e) in bands.iter().enumerate() {
            out.set(m, t, (e + cfg.log_floor).ln());
        }
    }
    Ok(out)
}

/// Orthonormal DCT-II, first `n_out` coefficients.
pub fn dct_ii_orthonormal(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len();
    let nf = n as f64;
    (0..n_out.min(n))
        .map(|k| {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Cepstral coefficients before resizing, `n_mfcc x n_frames`.
pub fn mfcc_coefficients(clip: &AudioClip, cfg: &DspConfig) -> Result<Matrix, DspError> {
    let log_mel = log_mel_energies(clip, cfg)?;
    let mut out = Matrix::zeros(cfg.n_mfcc, log_mel.cols);
    for t in 0..log_mel.cols {
        for (k, c) in dct_ii_orthonormal(&log_mel.column(t), cfg.n_mfcc)
            .into_iter()
            .enumerate()
        {
            out.set(k, t, c);
        }
    }
    Ok(out)
}

/// Fraction of adjacent pairs whose signs differ; zero counts as positive.
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (frame.len() - 1) as f64
}

pub fn zcr_sequence(clip: &AudioClip, cfg: &DspConfig) -> Result<Vec<f64>, DspError> {
    Ok(frame_signal(clip.samples(), cfg)?
        .into_iter()
        .map(zero_crossing_rate)
        .collect())
}

pub fn mel_spectrogram(clip: &AudioClip, cfg: &DspConfig) -> Result<FeatureMap, DspError> {
    Ok(resize_to_map(&log_mel_energies(clip, cfg)?))
}

pub fn mfcc(clip: &AudioClip, cfg: &DspConfig) -> Result<FeatureMap, DspError> {
    Ok(resize_to_map(&mfcc_coefficients(clip, cfg)?))
}

/// The per-frame rate sequence tiled over all rows, then resampled in time.
pub fn zcr(clip: &AudioClip, cfg: &DspConfig) -> Result<FeatureMap, DspError> {
    let seq = zcr_sequence(clip, cfg)?;
    let tiled = Matrix::from_fn(super::MAP_SIDE, seq.len(), |_, c| seq[c]);
    Ok(resize_to_map(&tiled))
}

/// Extractor for `kind` followed by min-max normalization: the network input.
pub fn extract_feature(
    kind: FeatureKind,
    clip: &AudioClip,
    cfg: &DspConfig,
) -> Result<FeatureMap, DspError> {
    let raw = match kind {
        FeatureKind::Ms => mel_spectrogram(clip, cfg)?,
        FeatureKind::Mfcc => mfcc(clip, cfg)?,
        FeatureKind::Zcr => zcr(clip, cfg)?,
    };
    Ok(normalize_map(&raw))
}
