use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::HarnessError;
use crate::audio_io::{write_wav, AudioClip, CLASS_COUNT};

/// Tone corpus: class `k` is a sine at `base_hz + step_hz * k` plus white
/// Gaussian noise at the given SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub seed: u64,
    pub sample_rate: u32,
    pub duration: f64,
    pub amplitude: f64,
    pub snr_db: f64,
    pub base_hz: f64,
    pub step_hz: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: CLASS_COUNT,
            per_class: 30,
            seed: 0,
            sample_rate: 8000,
            duration: 1.5,
            amplitude: 0.5,
            snr_db: 20.0,
            base_hz: 300.0,
            step_hz: 150.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.classes == 0 || self.classes > CLASS_COUNT || self.per_class == 0 {
            return Err(HarnessError::Config(format!(
                "need 1..={CLASS_COUNT} classes and at least one clip per class, got {} x {}",
                self.classes, self.per_class
            )));
        }
        let top = self.frequency(self.classes - 1);
        if !(top < f64::from(self.sample_rate) / 2.0) || self.base_hz <= 0.0 {
            return Err(HarnessError::Config(format!(
                "tone at {top} Hz is not below the Nyquist frequency"
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0 && self.duration > 0.0) {
            return Err(HarnessError::Config("amplitude must lie in (0, 1] and duration be positive".into()));
        }
        Ok(())
    }

    pub fn frequency(&self, class: usize) -> f64 {
        self.base_hz + self.step_hz * class as f64
    }

    /// Noise standard deviation giving `snr_db` against the tone's power `a^2 / 2`.
    pub fn noise_std(&self) -> f64 {
        let signal_power = self.amplitude * self.amplitude / 2.0;
        (signal_power / 10f64.powf(self.snr_db / 10.0)).sqrt()
    }
}

/// One noisy tone for `class`, drawing noise from `rng`.
pub fn synth_clip(spec: &SynthSpec, class: usize, rng: &mut ChaCha8Rng) -> AudioClip {
    let n = (spec.duration * f64::from(spec.sample_rate)).round() as usize;
    let noise = Normal::new(0.0, spec.noise_std()).expect("finite noise level");
    let w = 2.0 * PI * spec.frequency(class) / f64::from(spec.sample_rate);
    let samples = (0..n)
        .map(|i| (spec.amplitude * (w * i as f64).sin() + noise.sample(rng)).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(samples, spec.sample_rate, Some(class), format!("tone-{class}")).expect("samples in range")
}

/// Writes `<class>_synth_<index>.wav` files (the spoken-digit naming scheme)
/// into `dir` and returns their paths in generation order.
pub fn write_synth_corpus(dir: impl AsRef<Path>, spec: &SynthSpec) -> Result<Vec<PathBuf>, HarnessError> {
    spec.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut paths = Vec::with_capacity(spec.classes * spec.per_class);
    for class in 0..spec.classes {
        for index in 0..spec.per_class {
            let clip = synth_clip(spec, class, &mut rng);
            let path = dir.join(format!("{class}_synth_{index}.wav"));
            write_wav(&path, &clip)?;
            paths.push(path);
        }
    }
    Ok(paths)
}
