// Speaker-dependent and speaker-independent evaluation of a synthetic
// corpus with a low-amplitude speaker.

use lipread::harness::{evaluate, generate_in_memory, signatures_from_synth, PipelineConfig, Protocol, SynthConfig};

pub fn run_example() -> lipread::Result<(f64, f64)> {
    let cfg = SynthConfig {
        vocabulary_size: 5,
        speakers: 3,
        repetitions: 3,
        vsp_speakers: vec![2],
        frames_min: 10,
        frames_max: 20,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg)?;
    let sigs = signatures_from_synth(&data, false)?;
    let pipeline = PipelineConfig::default();

    let sd = evaluate(&sigs, Protocol::SpeakerDependent, &pipeline)?;
    let si = evaluate(&sigs, Protocol::SpeakerIndependent, &pipeline)?;
    print!("{}\n{}", sd.to_table(), si.to_table());
    Ok((sd.overall, si.overall))
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
