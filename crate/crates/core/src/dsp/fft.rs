//! Iterative radix-2 decimation-in-time FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{DspConfig, DspError};

/// Forward DFT `X[k] = sum_n x[n] e^{-2 pi i k n / N}` in place.
///
/// Panics if the length is not a power of two.
pub fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // direct evaluation keeps twiddle error at one rounding
                let w = Complex64::from_polar(1.0, step * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Windowed, zero-padded power spectrum of fixed-length frames. Holds the
/// window and scratch buffer so repeated frames do not reallocate.
#[derive(Debug, Clone)]
pub struct SpectrumAnalyzer {
    frame_len: usize,
    n_fft: usize,
    window: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SpectrumAnalyzer {
    pub fn new(cfg: &DspConfig) -> Self {
        Self {
            frame_len: cfg.frame_len,
            n_fft: cfg.n_fft,
            window: cfg.window.coefficients(cfg.frame_len),
            scratch: vec![Complex64::new(0.0, 0.0); cfg.n_fft],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Writes `|X[k]|^2` for `k = 0..=n_fft/2` into `out`.
    pub fn power_into(&mut self, frame: &[f64], out: &mut [f64]) -> Result<(), DspError> {
        if frame.len() != self.frame_len {
            return Err(DspError::BadFrameLength {
                got: frame.len(),
                expected: self.frame_len,
            });
        }
        for (slot, (x, w)) in self.scratch.iter_mut().zip(frame.iter().zip(&self.window)) {
            *slot = Complex64::new(x * w, 0.0);
        }
        for slot in &mut self.scratch[self.frame_len..] {
            *slot = Complex64::new(0.0, 0.0);
        }
        fft_in_place(&mut self.scratch);
        for (o, x) in out.iter_mut().zip(&self.scratch[..self.n_bins()]) {
            *o = x.norm_sqr();
        }
        Ok(())
    }
}

pub fn power_spectrum(frame: &[f64], cfg: &DspConfig) -> Result<Vec<f64>, DspError> {
    if !cfg.n_fft.is_power_of_two() || cfg.frame_len > cfg.n_fft {
        return Err(DspError::Config(format!(
            "n_fft {} must be a power of two >= frame_len {}",
            cfg.n_fft, cfg.frame_len
        )));
    }
    let mut analyzer = SpectrumAnalyzer::new(cfg);
    let mut out = vec![0.0; analyzer.n_bins()];
    analyzer.power_into(frame, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Window;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) reference DFT.
    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let angle = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                        Complex64::from_polar(v, angle)
                    })
                    .sum()
            })
            .collect()
    }

    fn rect(n: usize) -> DspConfig {
        DspConfig {
            frame_len: n,
            hop_len: n,
            n_fft: n,
            window: Window::Rectangular,
            ..DspConfig::for_sample_rate(8000)
        }
    }

    #[test]
    fn matches_naive_dft_on_random_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [8usize, 16, 64, 256] {
            for _ in 0..100 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft_in_place(&mut buf);
                let want = naive_dft(&x);
                let scale = want.iter().map(|c| c.norm()).fold(0.0, f64::max);
                for (got, want) in buf.iter().zip(&want) {
                    assert!((got - want).norm() / scale < 1e-9);
                }
            }
        }
    }

    #[test]
    fn parseval_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [8usize, 64, 1024] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_in_place(&mut buf);
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq: f64 = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            assert!((time - freq).abs() / time < 1e-9);
        }
    }

    #[test]
    fn zero_frame_has_zero_spectrum() {
        let p = power_spectrum(&[0.0; 16], &rect(16)).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        assert_eq!(p.len(), 9);
    }

    #[test]
    fn impulse_is_flat() {
        let mut frame = [0.0; 8];
        frame[0] = 1.0;
        let p = power_spectrum(&frame, &rect(8)).unwrap();
        assert_eq!(p, vec![1.0; 5]);
    }

    #[test]
    fn cosine_concentrates_in_its_bin() {
        let n = 16;
        let frame: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 4.0 * i as f64 / n as f64).cos())
            .collect();
        let p = power_spectrum(&frame, &rect(n)).unwrap();
        let oracle: Vec<f64> = naive_dft(&frame)[..=n / 2].iter().map(|c| c.norm_sqr()).collect();
        assert!((p[4] - oracle[4]).abs() / oracle[4] < 1e-9);
        assert!((p[4] - 64.0).abs() < 1e-9);
        for (k, v) in p.iter().enumerate().filter(|(k, _)| *k != 4) {
            assert!(*v < 1e-20, "bin {k} = {v}");
        }
    }

    #[test]
    fn zero_padding_matches_padded_naive_dft() {
        let cfg = DspConfig {
            frame_len: 10,
            hop_len: 5,
            n_fft: 16,
            window: Window::Hann,
            ..DspConfig::for_sample_rate(8000)
        };
        let frame: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let w = Window::Hann.coefficients(10);
        let mut padded: Vec<f64> = frame.iter().zip(&w).map(|(a, b)| a * b).collect();
        padded.resize(16, 0.0);
        let oracle = naive_dft(&padded);
        let p = power_spectrum(&frame, &cfg).unwrap();
        for k in 0..=8 {
            assert!((p[k] - oracle[k].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_frame_length_is_rejected() {
        assert!(matches!(
            power_spectrum(&[0.0; 7], &rect(8)),
            Err(DspError::BadFrameLength { got: 7, expected: 8 })
        ));
    }
}
