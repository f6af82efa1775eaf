//! Encodes a chirp at several bit depths and channel counts, parses it back
//! and reports the quantization error.

use audio_ensemble::audio_io::{encode_wav, fix_duration, parse_wav};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 8000;
    let chirp: Vec<f64> = (0..rate)
        .map(|i| {
            let t = f64::from(i) / f64::from(rate);
            0.8 * (2.0 * std::f64::consts::PI * (200.0 + 1500.0 * t) * t).sin()
        })
        .collect();

    for bits in [8, 16] {
        for channels in [1u16, 2] {
            let interleaved: Vec<f64> = chirp
                .iter()
                .flat_map(|&s| std::iter::repeat_n(s, channels as usize))
                .collect();
            let bytes = encode_wav(&interleaved, channels, rate, bits);
            let clip = parse_wav(&bytes)?;
            let err = clip
                .samples()
                .iter()
                .zip(&chirp)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            println!(
                "{bits:>2}-bit x{channels}: {:>6} bytes -> {} samples at {} Hz, max error {err:.2e}",
                bytes.len(),
                clip.samples().len(),
                clip.sample_rate()
            );
        }
    }

    let clip = parse_wav(&encode_wav(&chirp, 1, rate, 16))?;
    let fixed = fix_duration(&clip, 2.0);
    println!("fixed to {:.2} s ({} samples)", fixed.duration_seconds(), fixed.samples().len());
    Ok(())
}
