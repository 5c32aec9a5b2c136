// Turn a signature into long-format `frame,signal,value` rows, ready for
// any plotting tool.

use lipread::cli::plot_csv;
use lipread::harness::{extract_utterance, generate_in_memory, SynthConfig};

pub fn run_example() -> lipread::Result<usize> {
    let cfg = SynthConfig {
        vocabulary_size: 1,
        speakers: 1,
        repetitions: 1,
        frames_min: 6,
        frames_max: 6,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg)?;
    let sig = extract_utterance(&data.utterances[0].frames, None, None)?;
    let csv = plot_csv(&sig);
    print!("{csv}");
    Ok(csv.lines().count() - 1)
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
