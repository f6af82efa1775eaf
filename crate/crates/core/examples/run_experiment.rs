//! Runs the full protocol (every feature subset, repeated seeds) on the
//! tone corpus and prints the comparison table in both formats.

use audio_ensemble::harness::{
    emit_table, run_experiment, write_synth_corpus, ExperimentSpec, SynthSpec, TableFormat,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    write_synth_corpus(dir.path(), &SynthSpec::default())?;

    let mut spec = ExperimentSpec::new(dir.path());
    spec.repeats = 2;
    spec.train.epochs = 10;
    spec.train.batch_size = 4;
    let report = run_experiment(&spec)?;

    print!("{}", emit_table(&report, TableFormat::Markdown));
    println!();
    print!("{}", emit_table(&report, TableFormat::Csv));
    for run in &report.runs {
        for (kind, curve) in &run.curves {
            let best = curve.iter().map(|r| r.val_accuracy).fold(0.0, f64::max);
            println!("repeat {} {kind}: best val accuracy {best:.3}", run.repeat);
        }
    }
    Ok(())
}
