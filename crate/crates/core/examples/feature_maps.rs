//! Extracts the three network inputs from one tone and prints them as
//! character shading, plus the mel band layout.

use audio_ensemble::audio_io::fix_duration;
use audio_ensemble::dsp::{build_mel_filterbank, extract_feature, DspConfig, FeatureKind, FeatureMap, MAP_SIDE};
use audio_ensemble::harness::{synth_clip, SynthSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SHADES: &[u8] = b" .:-=+*#%@";

fn draw(map: &FeatureMap) {
    // Row 0 is the lowest band; print it at the bottom.
    for row in (0..MAP_SIDE).rev() {
        let line: String = (0..MAP_SIDE)
            .map(|col| {
                let level = (map.get(row, col) * (SHADES.len() - 1) as f64).round() as usize;
                SHADES[level] as char
            })
            .collect();
        println!("  |{line}|");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let clip = fix_duration(&synth_clip(&spec, 4, &mut rng), 2.0);
    let cfg = DspConfig::for_sample_rate(clip.sample_rate());
    println!(
        "{} Hz tone, {} samples, frame {} hop {} n_fft {}",
        spec.frequency(4),
        clip.samples().len(),
        cfg.frame_len,
        cfg.hop_len,
        cfg.n_fft
    );

    let bank = build_mel_filterbank(clip.sample_rate(), &cfg)?;
    let centers = bank.center_frequencies();
    println!(
        "{} mel bands, centers {:.1} .. {:.1} Hz",
        bank.n_mels(),
        centers[0],
        centers[centers.len() - 1]
    );

    for kind in FeatureKind::ALL {
        let map = extract_feature(kind, &clip, &cfg)?;
        let mean = map.values().iter().sum::<f64>() / map.values().len() as f64;
        println!("\n{kind}: mean {mean:.3}");
        draw(&map);
    }
    Ok(())
}
