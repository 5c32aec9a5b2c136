// Render a small synthetic dataset to a temporary directory and list what
// was written.

use lipread::harness::{generate, DatasetManifest, SynthConfig};

pub fn run_example() -> lipread::Result<(usize, usize)> {
    let cfg = SynthConfig {
        vocabulary_size: 3,
        speakers: 2,
        repetitions: 2,
        frames_min: 8,
        frames_max: 12,
        ..SynthConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("lipread-synth-{}", std::process::id()));
    let manifest_path = generate(&cfg, &dir)?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    println!("manifest: {}", manifest_path.display());
    println!("vocabulary: {:?}", manifest.vocabulary());
    println!("subjects: {:?}", manifest.subjects());
    let mut frames = 0;
    for u in &manifest.utterances {
        frames += manifest.load_frames(u)?.len();
    }
    println!("{} utterances, {frames} frames", manifest.utterances.len());
    let result = (manifest.utterances.len(), frames);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(result)
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
