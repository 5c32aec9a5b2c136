// Extract the normalized eight-signal signature of one synthetic utterance
// and write it as CSV.

use lipread::harness::{extract_utterance, generate_in_memory, SynthConfig};
use lipread::{WordSignature, SIGNAL_NAMES};

pub fn run_example() -> lipread::Result<WordSignature> {
    let cfg = SynthConfig {
        vocabulary_size: 1,
        speakers: 1,
        repetitions: 1,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg)?;
    let utt = &data.utterances[0];
    let sig = extract_utterance(&utt.frames, None, None)?
        .with_label(utt.word.clone())
        .with_subject(utt.subject.clone(), utt.session);

    println!("{} frames of '{}'", sig.n(), utt.word);
    for (s, name) in SIGNAL_NAMES.iter().enumerate() {
        let col = sig.column(s);
        let spark: String = col
            .iter()
            .map(|v| [' ', '.', ':', '-', '=', '+', '*', '#'][(v * 7.0).round() as usize])
            .collect();
        println!("{name:>3} |{spark}|");
    }
    print!("{}", sig.to_csv_string());
    Ok(sig)
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
