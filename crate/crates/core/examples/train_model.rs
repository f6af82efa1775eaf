//! Trains the CNN on mel spectrograms of the tone corpus, saves the
//! checkpoint and reloads it.
//!
//! ```text
//! cargo run --release --example train_model -- 20
//! ```

use audio_ensemble::audio_io::{fix_duration, load_dataset, split_dataset, DatasetLayout, DatasetManifest, SplitSpec};
use audio_ensemble::dsp::{extract_feature, DspConfig, FeatureKind};
use audio_ensemble::harness::{write_synth_corpus, SynthSpec};
use audio_ensemble::nn::{
    accuracy_on, build_table1_cnn, load_checkpoint, save_checkpoint, train_with_progress, Example,
    TrainConfig,
};

fn examples(part: &DatasetManifest) -> Result<Vec<Example>, Box<dyn std::error::Error>> {
    part.entries
        .iter()
        .map(|e| {
            let clip = fix_duration(&e.load()?, 2.0);
            let map = extract_feature(FeatureKind::Ms, &clip, &DspConfig::for_sample_rate(clip.sample_rate()))?;
            Ok(Example { map, label: e.label })
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map_or(Ok(20), |s| s.parse())?;
    let dir = tempfile::tempdir()?;
    write_synth_corpus(dir.path(), &SynthSpec::default())?;
    let split = split_dataset(&load_dataset(dir.path(), DatasetLayout::Fsdd)?, &SplitSpec::with_seed(0))?;
    let (train, val, test) = (examples(&split.train)?, examples(&split.val)?, examples(&split.test)?);

    let cfg = TrainConfig {
        epochs,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let ckpt = train_with_progress(&build_table1_cnn(), &train, &val, &cfg, FeatureKind::Ms, |r| {
        println!("epoch {:>3}  loss {:.4}  val {:.3}", r.epoch, r.train_loss, r.val_accuracy);
    })?;

    let path = dir.path().join("ms.ckpt");
    save_checkpoint(&ckpt, &path)?;
    let back = load_checkpoint(&path)?;
    println!(
        "{} checkpoint: {} bytes, test accuracy {:.3}",
        back.feature_kind,
        std::fs::metadata(&path)?.len(),
        accuracy_on(&back.network, &test)?
    );
    Ok(())
}
