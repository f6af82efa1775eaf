//! Trains one model per feature on the tone corpus and classifies a fresh
//! clip with the averaged ensemble.

use audio_ensemble::audio_io::{fix_duration, load_dataset, split_dataset, DatasetLayout, DatasetManifest, SplitSpec};
use audio_ensemble::dsp::{extract_feature, DspConfig, FeatureKind};
use audio_ensemble::ensemble::{ensemble_predict, Ensemble};
use audio_ensemble::harness::{synth_clip, write_synth_corpus, SynthSpec};
use audio_ensemble::nn::{build_table1_cnn, train, Example, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn examples(part: &DatasetManifest, kind: FeatureKind) -> Result<Vec<Example>, Box<dyn std::error::Error>> {
    part.entries
        .iter()
        .map(|e| {
            let clip = fix_duration(&e.load()?, 2.0);
            let map = extract_feature(kind, &clip, &DspConfig::for_sample_rate(clip.sample_rate()))?;
            Ok(Example { map, label: e.label })
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec::default();
    write_synth_corpus(dir.path(), &spec)?;
    let split = split_dataset(&load_dataset(dir.path(), DatasetLayout::Fsdd)?, &SplitSpec::with_seed(1))?;
    let cfg = TrainConfig {
        epochs: 8,
        batch_size: 4,
        ..TrainConfig::default()
    };

    let mut members = Vec::new();
    for kind in FeatureKind::ALL {
        let ckpt = train(
            &build_table1_cnn(),
            &examples(&split.train, kind)?,
            &examples(&split.val, kind)?,
            &cfg,
            kind,
        )?;
        println!("trained {kind}");
        members.push(ckpt);
    }
    let ensemble = Ensemble::new(members)?;

    let clip = fix_duration(&synth_clip(&spec, 6, &mut ChaCha8Rng::seed_from_u64(1234)), 2.0);
    let out = ensemble_predict(&ensemble, &clip, &DspConfig::for_sample_rate(clip.sample_rate()))?;
    for (kind, p) in &out.member_probabilities {
        println!("{kind:>5}: argmax {} p={:.3}", p.argmax(), p.as_slice()[p.argmax()]);
    }
    println!(
        " mean: argmax {} p={:.3}  (true class 6; extract {:?}, infer {:?})",
        out.label,
        out.probabilities.as_slice()[out.label],
        out.extract_time,
        out.infer_time
    );
    Ok(())
}
