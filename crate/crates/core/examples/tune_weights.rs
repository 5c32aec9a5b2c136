// Grid-search fusion weights by leave-one-out accuracy on the training
// signatures of one synthetic speaker.

use lipread::harness::{generate_in_memory, signatures_from_synth, SynthConfig};
use lipread::recognizer::{leave_one_out_accuracy, tune_weights, DistanceConfig};
use lipread::{FusionWeights, TrainingIndex, SIGNAL_NAMES};

pub fn run_example() -> lipread::Result<(f64, f64)> {
    let cfg = SynthConfig {
        vocabulary_size: 4,
        speakers: 1,
        repetitions: 3,
        frames_min: 10,
        frames_max: 16,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg)?;
    let sigs = signatures_from_synth(&data, true)?;
    let index = TrainingIndex::new(sigs, DistanceConfig::default(), 1)?;

    let before = leave_one_out_accuracy(&index)?;
    let weights: FusionWeights = tune_weights(&index)?;
    let tuned = index.with_weights(weights);
    let after = leave_one_out_accuracy(&tuned)?;
    for (name, w) in SIGNAL_NAMES.iter().zip(weights.values()) {
        println!("{name:>3} {w:.2}");
    }
    println!("leave-one-out accuracy {before:.3} -> {after:.3}");
    Ok((before, after))
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
