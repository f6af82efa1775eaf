use serde::{Deserialize, Serialize};

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()
                })
                .collect(),
        }
    }
}

/// Framing and filterbank parameters for one sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspConfig {
    pub frame_len: usize,
    pub hop_len: usize,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub window: Window,
    pub log_floor: f64,
}

impl DspConfig {
    /// 25 ms frames (rounded to an even count), 10 ms hop, 40 mel bands,
    /// 20 cepstral coefficients, full band, Hann window.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        DspSettings::default().resolve(sample_rate)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let bad = |msg: String| Err(DspError::Config(msg));
        if self.hop_len == 0 || self.hop_len > self.frame_len || self.frame_len > self.n_fft {
            return bad(format!(
                "need 0 < hop_len ({}) <= frame_len ({}) <= n_fft ({})",
                self.hop_len, self.frame_len, self.n_fft
            ));
        }
        if !self.n_fft.is_power_of_two() {
            return bad(format!("n_fft {} is not a power of two", self.n_fft));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.f_min >= 0.0 && self.f_min < self.f_max && self.f_max <= nyquist) {
            return bad(format!(
                "need 0 <= f_min ({}) < f_max ({}) <= {nyquist}",
                self.f_min, self.f_max
            ));
        }
        if self.n_mels == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad(format!(
                "need 0 < n_mfcc ({}) <= n_mels ({})",
                self.n_mfcc, self.n_mels
            ));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad(format!("log_floor {} must be positive", self.log_floor));
        }
        Ok(())
    }
}

/// Rate-independent DSP settings; `None` fields take the rate-derived default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspSettings {
    pub frame_len: Option<usize>,
    pub hop_len: Option<usize>,
    pub n_fft: Option<usize>,
    pub n_mels: Option<usize>,
    pub n_mfcc: Option<usize>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub window: Option<Window>,
    pub log_floor: Option<f64>,
}

impl DspSettings {
    pub fn resolve(&self, sample_rate: u32) -> DspConfig {
        let sr = f64::from(sample_rate);
        let frame_len = self
            .frame_len
            .unwrap_or_else(|| (((0.025 * sr) / 2.0).round() as usize * 2).max(2));
        let hop_len = self
            .hop_len
            .unwrap_or_else(|| ((0.010 * sr).round() as usize).max(1));
        DspConfig {
            frame_len,
            hop_len,
            n_fft: self.n_fft.unwrap_or_else(|| frame_len.next_power_of_two()),
            n_mels: self.n_mels.unwrap_or(40),
            n_mfcc: self.n_mfcc.unwrap_or(20),
            f_min: self.f_min.unwrap_or(0.0),
            f_max: self.f_max.unwrap_or(sr / 2.0),
            window: self.window.unwrap_or(Window::Hann),
            log_floor: self.log_floor.unwrap_or(1e-10),
        }
    }
}
