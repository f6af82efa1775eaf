//! Writes the ten-tone corpus, loads it back as a dataset and splits it.
//!
//! ```text
//! cargo run --example synth_corpus -- /tmp/tones
//! ```

use audio_ensemble::audio_io::{load_dataset, split_dataset, DatasetLayout, SplitSpec};
use audio_ensemble::harness::{write_synth_corpus, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/tones".into());
    let spec = SynthSpec::default();
    let paths = write_synth_corpus(&dir, &spec)?;
    println!("wrote {} clips to {dir}", paths.len());
    for class in 0..spec.classes {
        println!("  class {class}: {:6.1} Hz", spec.frequency(class));
    }
    println!("noise std {:.5} (SNR {} dB)", spec.noise_std(), spec.snr_db);

    let manifest = load_dataset(&dir, DatasetLayout::Fsdd)?;
    let split = split_dataset(&manifest, &SplitSpec::with_seed(7))?;
    println!(
        "split: {} train / {} val / {} test",
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    println!("test class counts {:?}", split.test.class_counts());
    Ok(())
}
