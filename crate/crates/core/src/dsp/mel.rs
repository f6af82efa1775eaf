use std::collections::HashMap;
use std::f64::consts::LN_10;
use std::sync::{Arc, OnceLock, RwLock};

use super::{DspConfig, DspError};

const MEL_SCALE: f64 = 2595.0;
const MEL_BREAK_HZ: f64 = 700.0;

/// `2595 * log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> Result<f64, DspError> {
    if !(hz >= 0.0) || !hz.is_finite() {
        return Err(DspError::Domain(format!("frequency {hz} Hz is negative or not finite")));
    }
    Ok(MEL_SCALE * (hz / MEL_BREAK_HZ).ln_1p() / LN_10)
}

/// `700 * (10^(m / 2595) - 1)`.
pub fn mel_to_hz(mel: f64) -> Result<f64, DspError> {
    if !(mel >= 0.0) || !mel.is_finite() {
        return Err(DspError::Domain(format!("mel value {mel} is negative or not finite")));
    }
    Ok(MEL_BREAK_HZ * (mel / MEL_SCALE * LN_10).exp_m1())
}

/// Triangular filters over the non-negative FFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_mels: usize,
    n_bins: usize,
    /// Row-major `n_mels x n_bins`.
    weights: Vec<f64>,
    band_edges: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn band_edges(&self) -> &[f64] {
        &self.band_edges
    }

    pub fn row(&self, band: usize) -> &[f64] {
        &self.weights[band * self.n_bins..(band + 1) * self.n_bins]
    }

    /// Filter peak frequencies (the interior band edges).
    pub fn center_frequencies(&self) -> &[f64] {
        &self.band_edges[1..self.band_edges.len() - 1]
    }

    /// Projects a power spectrum of `n_bins` values onto the mel bands.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        debug_assert_eq!(power.len(), self.n_bins);
        for (band, o) in out.iter_mut().enumerate().take(self.n_mels) {
            *o = self
                .row(band)
                .iter()
                .zip(power)
                .map(|(w, p)| w * p)
                .sum();
        }
    }
}

/// Band edges are equally spaced in mel between `f_min` and `f_max`; band `i`
/// rises from edge `i` to a unit peak at edge `i+1` and falls to zero at edge
/// `i+2`, sampled at the FFT bin centre frequencies `k * sr / n_fft`.
pub fn build_mel_filterbank(sample_rate: u32, cfg: &DspConfig) -> Result<MelFilterbank, DspError> {
    cfg.validate(sample_rate)?;
    let n_mels = cfg.n_mels;
    let n_bins = cfg.n_fft / 2 + 1;
    let mel_lo = hz_to_mel(cfg.f_min)?;
    let mel_hi = hz_to_mel(cfg.f_max)?;
    let step = (mel_hi - mel_lo) / (n_mels + 1) as f64;
    let mut band_edges = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect::<Result<Vec<_>, _>>()?;
    // pin the ends exactly
    band_edges[0] = cfg.f_min;
    band_edges[n_mels + 1] = cfg.f_max;
    if band_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DspError::Config("mel band edges are not strictly increasing".into()));
    }

    let bin_hz = f64::from(sample_rate) / cfg.n_fft as f64;
    let mut weights = vec![0.0; n_mels * n_bins];
    for band in 0..n_mels {
        let (lo, peak, hi) = (band_edges[band], band_edges[band + 1], band_edges[band + 2]);
        let row = &mut weights[band * n_bins..(band + 1) * n_bins];
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            *w = if f > lo && f < peak {
                (f - lo) / (peak - lo)
            } else if f >= peak && f < hi {
                (hi - f) / (hi - peak)
            } else {
                0.0
            };
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(DspError::Config(format!(
                "mel band {band} ({lo:.1}-{hi:.1} Hz) covers no FFT bin; \
                 reduce n_mels or increase n_fft"
            )));
        }
    }

    Ok(MelFilterbank {
        n_mels,
        n_bins,
        weights,
        band_edges,
    })
}

type FilterbankKey = (u32, usize, usize, u64, u64);

fn filterbank_table() -> &'static RwLock<HashMap<FilterbankKey, Arc<MelFilterbank>>> {
    static TABLE: OnceLock<RwLock<HashMap<FilterbankKey, Arc<MelFilterbank>>>> = OnceLock::new();
    TABLE.get_or_init(Default::default)
}

/// Shared filterbank for `(sample_rate, cfg)`, built on first use.
pub fn cached_filterbank(sample_rate: u32, cfg: &DspConfig) -> Result<Arc<MelFilterbank>, DspError> {
    let key = (
        sample_rate,
        cfg.n_fft,
        cfg.n_mels,
        cfg.f_min.to_bits(),
        cfg.f_max.to_bits(),
    );
    if let Some(fb) = filterbank_table().read().unwrap().get(&key) {
        return Ok(Arc::clone(fb));
    }
    let built = Arc::new(build_mel_filterbank(sample_rate, cfg)?);
    let mut table = filterbank_table().write().unwrap();
    Ok(Arc::clone(table.entry(key).or_insert(built)))
}
