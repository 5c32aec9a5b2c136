//! Datasets and evaluation: manifest ingestion, the synthetic talking-mouth
//! generator, the speaker-dependent / speaker-independent protocols and
//! their reports.

pub mod manifest;
pub mod protocols;
pub mod report;
pub mod synth;

pub use manifest::{DatasetManifest, Utterance};
pub use protocols::{
    evaluate, evaluate_leave_one_out, evaluate_speaker_dependent, evaluate_speaker_independent, extract_utterance,
    signatures_from_manifest, signatures_from_synth, PipelineConfig, Protocol,
};
pub use report::{EvaluationReport, SubjectAccuracy};
pub use synth::{generate, generate_in_memory, SynthConfig, SynthDataset, SynthUtterance};
