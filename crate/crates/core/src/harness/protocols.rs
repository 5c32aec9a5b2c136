//! Feature extraction over whole datasets and the evaluation protocols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::report::{EvaluationReport, Fold, SubjectAccuracy};
use super::synth::SynthDataset;
use crate::error::{Error, Result};
use crate::features::{extract_signature, WordSignature};
use crate::imaging::{BoundingBox, Frame};
use crate::localize::{localize, LipRegion};
use crate::recognizer::{classify, tune_weights, DistanceConfig, TrainingIndex, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub distance: DistanceConfig,
    /// Grid-search fusion weights on each fold's training set.
    pub tune_weights: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: DEFAULT_K,
            distance: DistanceConfig::default(),
            tune_weights: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Per subject: train on session 2, test on session 1.
    SpeakerDependent,
    /// Leave one subject out.
    SpeakerIndependent,
    /// Per subject, leave one utterance out over both sessions.
    LeaveOneOut,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::SpeakerDependent => "speaker-dependent",
            Protocol::SpeakerIndependent => "speaker-independent",
            Protocol::LeaveOneOut => "loo",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speaker-dependent" => Ok(Protocol::SpeakerDependent),
            "speaker-independent" => Ok(Protocol::SpeakerIndependent),
            "loo" => Ok(Protocol::LeaveOneOut),
            other => Err(Error::Config(format!(
                "unknown protocol {other:?} (speaker-dependent|speaker-independent|loo)"
            ))),
        }
    }
}

/// Localizes (or takes the given boxes) and extracts one word signature.
pub fn extract_utterance(
    frames: &[Frame],
    face_box: Option<BoundingBox>,
    rois: Option<&[BoundingBox]>,
) -> Result<WordSignature> {
    let regions: Vec<LipRegion> = match rois {
        Some(boxes) => {
            if boxes.len() != frames.len() {
                return Err(Error::Dimension(format!(
                    "{} frames but {} boxes",
                    frames.len(),
                    boxes.len()
                )));
            }
            boxes.iter().map(|&b| LipRegion::from_box(b)).collect()
        }
        None => frames
            .iter()
            .map(|f| localize(f, face_box.unwrap_or_else(|| f.bounds())))
            .collect::<Result<_>>()?,
    };
    extract_signature(frames, &regions)
}

/// Labelled signatures for every synthetic utterance, localizing each
/// frame (or using the generator's boxes when `use_truth`).
pub fn signatures_from_synth(data: &SynthDataset, use_truth: bool) -> Result<Vec<WordSignature>> {
    data.utterances
        .iter()
        .map(|u| {
            let rois = use_truth.then_some(u.truth.as_slice());
            Ok(extract_utterance(&u.frames, None, rois)?
                .with_label(&u.word)
                .with_subject(&u.subject, u.session))
        })
        .collect()
}

pub fn signatures_from_manifest(manifest: &DatasetManifest) -> Result<Vec<WordSignature>> {
    manifest
        .utterances
        .iter()
        .map(|u| {
            let frames = manifest.load_frames(u)?;
            let regions = manifest.regions(u, &frames)?;
            Ok(extract_signature(&frames, &regions)?
                .with_label(&u.word)
                .with_subject(&u.subject, u.session))
        })
        .collect()
}

fn subject_of(s: &WordSignature) -> Result<&str> {
    s.subject
        .as_deref()
        .ok_or_else(|| Error::Manifest("signature without subject id".into()))
}

fn label_of(s: &WordSignature) -> Result<&str> {
    s.label
        .as_deref()
        .ok_or_else(|| Error::Manifest("signature without word label".into()))
}

struct Tally {
    vocabulary: Vec<String>,
    confusion: Vec<Vec<usize>>,
    per_subject: BTreeMap<String, (usize, usize)>,
    folds: Vec<Fold>,
}

impl Tally {
    fn new(sigs: &[WordSignature]) -> Result<Self> {
        let vocabulary: Vec<String> = sigs
            .iter()
            .map(|s| label_of(s).map(str::to_string))
            .collect::<Result<BTreeSet<_>>>()?
            .into_iter()
            .collect();
        let n = vocabulary.len();
        Ok(Tally {
            vocabulary,
            confusion: vec![vec![0; n]; n],
            per_subject: BTreeMap::new(),
            folds: Vec::new(),
        })
    }

    fn index(&self, label: &str) -> usize {
        self.vocabulary
            .binary_search_by(|v| v.as_str().cmp(label))
            .expect("label in vocabulary")
    }

    fn record(&mut self, subject: &str, truth: &str, predicted: &str) {
        let (t, p) = (self.index(truth), self.index(predicted));
        self.confusion[t][p] += 1;
        let e = self.per_subject.entry(subject.to_string()).or_insert((0, 0));
        e.1 += 1;
        if t == p {
            e.0 += 1;
        }
    }

    fn finish(self, protocol: Protocol, config: PipelineConfig) -> EvaluationReport {
        let per_subject: Vec<SubjectAccuracy> = self
            .per_subject
            .iter()
            .map(|(s, &(c, t))| SubjectAccuracy {
                subject: s.clone(),
                correct: c,
                total: t,
                accuracy: if t == 0 { 0.0 } else { c as f64 / t as f64 },
            })
            .collect();
        let correct: usize = per_subject.iter().map(|s| s.correct).sum();
        let total: usize = per_subject.iter().map(|s| s.total).sum();
        EvaluationReport {
            protocol: protocol.name().to_string(),
            per_subject,
            overall: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            correct,
            total,
            vocabulary: self.vocabulary,
            confusion: self.confusion,
            folds: self.folds,
            config,
        }
    }
}

fn build_index(train: Vec<WordSignature>, cfg: &PipelineConfig) -> Result<TrainingIndex> {
    let index = TrainingIndex::new(train, cfg.distance, cfg.k)?;
    if cfg.tune_weights {
        let w = tune_weights(&index)?;
        Ok(index.with_weights(w))
    } else {
        Ok(index)
    }
}

fn run_fold(
    tally: &mut Tally,
    test_subject: &str,
    train: Vec<WordSignature>,
    test: &[&WordSignature],
    cfg: &PipelineConfig,
) -> Result<()> {
    let train_subjects = train
        .iter()
        .map(|s| subject_of(s).map(str::to_string))
        .collect::<Result<BTreeSet<_>>>()?
        .into_iter()
        .collect();
    let train_count = train.len();
    let index = build_index(train, cfg)?;
    for probe in test {
        let p = classify(&index, probe)?;
        tally.record(subject_of(probe)?, label_of(probe)?, &p.label);
    }
    tally.folds.push(Fold {
        test_subject: test_subject.to_string(),
        train_subjects,
        train_count,
        test_count: test.len(),
    });
    Ok(())
}

fn by_subject(sigs: &[WordSignature]) -> Result<BTreeMap<String, Vec<&WordSignature>>> {
    let mut map: BTreeMap<String, Vec<&WordSignature>> = BTreeMap::new();
    for s in sigs {
        map.entry(subject_of(s)?.to_string()).or_default().push(s);
    }
    Ok(map)
}

pub fn evaluate_speaker_dependent(sigs: &[WordSignature], cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let mut tally = Tally::new(sigs)?;
    for (subject, items) in by_subject(sigs)? {
        let test: Vec<&WordSignature> = items.iter().copied().filter(|s| s.session == Some(1)).collect();
        let train: Vec<WordSignature> = items
            .iter()
            .filter(|s| s.session == Some(2))
            .map(|s| (*s).clone())
            .collect();
        if test.is_empty() || train.is_empty() {
            return Err(Error::Manifest(format!(
                "subject {subject} needs both session 1 (test) and session 2 (train) utterances"
            )));
        }
        run_fold(&mut tally, &subject, train, &test, cfg)?;
    }
    Ok(tally.finish(Protocol::SpeakerDependent, *cfg))
}

pub fn evaluate_speaker_independent(sigs: &[WordSignature], cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let groups = by_subject(sigs)?;
    if groups.len() < 2 {
        return Err(Error::Manifest(format!(
            "speaker-independent evaluation needs at least 2 subjects, found {}",
            groups.len()
        )));
    }
    let mut tally = Tally::new(sigs)?;
    for (subject, test) in &groups {
        let train: Vec<WordSignature> = groups
            .iter()
            .filter(|(s, _)| *s != subject)
            .flat_map(|(_, v)| v.iter().map(|s| (*s).clone()))
            .collect();
        run_fold(&mut tally, subject, train, test, cfg)?;
    }
    Ok(tally.finish(Protocol::SpeakerIndependent, *cfg))
}

pub fn evaluate_leave_one_out(sigs: &[WordSignature], cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let mut tally = Tally::new(sigs)?;
    for (subject, items) in by_subject(sigs)? {
        if items.len() < 2 {
            return Err(Error::Manifest(format!(
                "subject {subject} has fewer than 2 utterances"
            )));
        }
        for i in 0..items.len() {
            let train: Vec<WordSignature> = items
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| (*s).clone())
                .collect();
            run_fold(&mut tally, &subject, train, &items[i..=i], cfg)?;
        }
    }
    Ok(tally.finish(Protocol::LeaveOneOut, *cfg))
}

pub fn evaluate(sigs: &[WordSignature], protocol: Protocol, cfg: &PipelineConfig) -> Result<EvaluationReport> {
    match protocol {
        Protocol::SpeakerDependent => evaluate_speaker_dependent(sigs, cfg),
        Protocol::SpeakerIndependent => evaluate_speaker_independent(sigs, cfg),
        Protocol::LeaveOneOut => evaluate_leave_one_out(sigs, cfg),
    }
}
