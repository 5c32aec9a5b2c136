//! Command-line front end: `synth | localize | extract | train | classify |
//! evaluate | plot`.
//!
//! Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 model.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::features::{extract_signature, WordSignature, SIGNAL_NAMES};
use crate::harness::{self, DatasetManifest, PipelineConfig, Protocol, SynthConfig};
use crate::imaging::io::read_frames_dir;
use crate::imaging::BoundingBox;
use crate::localize::{format_roi_csv, localize, regions_from_roi_file, LipRegion};
use crate::recognizer::{classify, tune_weights, DistanceConfig, DistanceMode, FusionWeights, TrainingIndex};

#[derive(Debug, Parser)]
#[command(
    name = "lipread",
    version,
    about = "Visual word recognition from mouth-region frame sequences"
)]
pub struct Cli {
    /// Seed for every random choice (only `synth` draws random numbers)
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic dataset (frames, ground truth, manifest.json)
    Synth(SynthArgs),
    /// Write the detected mouth box of every frame as frame_index,x,y,w,h
    Localize(LocalizeArgs),
    /// Extract the normalized 8-signal word signature of one utterance
    Extract(ExtractArgs),
    /// Build a KNN model directory from a manifest
    Train(TrainArgs),
    /// Predict the word of one signature (or frame directory)
    Classify(ClassifyArgs),
    /// Run an evaluation protocol over a manifest and write the report pair
    Evaluate(EvaluateArgs),
    /// Long-format frame,signal,value CSV of a signature, for plotting
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Vocabulary size
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub words: u32,
    /// Number of speakers
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub speakers: u32,
    /// Repetitions of each word per session
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    /// Shortest utterance in frames
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
    pub frames_min: u32,
    /// Longest utterance in frames
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    pub frames_max: u32,
    /// Gaussian pixel noise standard deviation
    #[arg(long, default_value_t = 4.0)]
    pub noise: f64,
    /// Frame width in pixels
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    /// Frame height in pixels
    #[arg(long, default_value_t = 120)]
    pub height: usize,
    /// Per-speaker trajectory perturbation
    #[arg(long, default_value_t = 0.35)]
    pub speaker_variation: f64,
    /// Per-repetition trajectory variation
    #[arg(long, default_value_t = 0.05)]
    pub jitter: f64,
    /// Give every speaker the same parameters
    #[arg(long)]
    pub clone_speakers: bool,
    /// Comma-separated zero-based indices of low-amplitude speakers
    #[arg(long, value_delimiter = ',')]
    pub vsp: Vec<usize>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FaceBoxArg {
    /// Face box x,y,w,h (default: whole frame)
    #[arg(long, value_parser = parse_box)]
    pub face_box: Option<BoundingBox>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Directory of numbered PNG/PPM frames
    #[arg(long)]
    pub frames: PathBuf,
    #[command(flatten)]
    pub face: FaceBoxArg,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory of numbered PNG/PPM frames
    #[arg(long)]
    pub frames: PathBuf,
    /// ROI override file (frame_index,x,y,w,h); skips localization
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[command(flatten)]
    pub face: FaceBoxArg,
    /// Word label stored in the signature metadata
    #[arg(long)]
    pub label: Option<String>,
    /// Subject id stored in the signature metadata
    #[arg(long)]
    pub subject: Option<String>,
    /// Session (1 or 2) stored in the signature metadata
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub session: u8,
    /// Output signature CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Neighbours consulted by the vote
    #[arg(long, default_value_t = crate::recognizer::DEFAULT_K, value_parser = parse_k)]
    pub k: usize,
    /// Signal distance: dtw or interp
    #[arg(long, default_value = "dtw", value_parser = parse_mode)]
    pub distance: DistanceMode,
    /// Resampling length for interp distance
    #[arg(long, default_value_t = crate::recognizer::DEFAULT_INTERP_LEN)]
    pub interp_len: usize,
    /// Fusion weights w1,...,w8 in H,W,M,Q,R,ER,RC,T order
    #[arg(long, default_value = "1,1,1,1,1,1,1,1", value_parser = parse_weights, conflicts_with = "weights_file")]
    pub weights: FusionWeights,
    /// File holding the fusion weights as one comma-separated line
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    /// Grid-search the fusion weights on the training data
    #[arg(long)]
    pub tune_weights: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Model directory written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Signature CSV to classify
    #[arg(long, conflicts_with = "frames", required_unless_present = "frames")]
    pub signature: Option<PathBuf>,
    /// Frame directory to extract and classify
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// ROI override file for --frames
    #[arg(long, requires = "frames")]
    pub roi: Option<PathBuf>,
    /// Override the model's k
    #[arg(long, value_parser = parse_k)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
    /// speaker-dependent, speaker-independent or loo
    #[arg(long, default_value = "speaker-dependent", value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Report directory (<protocol>.json and <protocol>.txt)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Signature CSV
    #[arg(long)]
    pub signature: PathBuf,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_box(s: &str) -> std::result::Result<BoundingBox, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad integer {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        &[x, y, w, h] => BoundingBox::new(x, y, w, h).map_err(|e| e.to_string()),
        _ => Err("expected x,y,w,h".into()),
    }
}

fn parse_k(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("k must be a positive integer, got {s:?}")),
    }
}

fn parse_mode(s: &str) -> std::result::Result<DistanceMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_weights(s: &str) -> std::result::Result<FusionWeights, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_protocol(s: &str) -> std::result::Result<Protocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ModelArgs {
    fn pipeline(&self) -> Result<PipelineConfig> {
        let weights = match &self.weights_file {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.trim().parse()?
            }
            None => self.weights,
        };
        if self.interp_len < 2 {
            return Err(Error::Config("--interp-len must be at least 2".into()));
        }
        Ok(PipelineConfig {
            k: self.k,
            distance: DistanceConfig {
                mode: self.distance,
                interp_len: self.interp_len,
                weights,
            },
            tune_weights: self.tune_weights,
        })
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn frame_regions(
    frames_dir: &Path,
    roi: Option<&Path>,
    face_box: Option<BoundingBox>,
) -> Result<(Vec<crate::Frame>, Vec<LipRegion>)> {
    let frames = read_frames_dir(frames_dir)?;
    let regions = match roi {
        Some(r) => regions_from_roi_file(r, &frames)?,
        None => frames
            .iter()
            .map(|f| localize(f, face_box.unwrap_or_else(|| f.bounds())))
            .collect::<Result<_>>()?,
    };
    Ok((frames, regions))
}

pub fn cmd_synth(a: &SynthArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        vocabulary_size: a.words as usize,
        speakers: a.speakers as usize,
        repetitions: a.reps as usize,
        frames_min: a.frames_min as usize,
        frames_max: a.frames_max as usize,
        noise_sigma: a.noise,
        seed,
        width: a.width,
        height: a.height,
        speaker_variation: a.speaker_variation,
        vsp_speakers: a.vsp.clone(),
        utterance_jitter: a.jitter,
        clone_speakers: a.clone_speakers,
        ..SynthConfig::default()
    };
    let manifest = harness::generate(&cfg, &a.out)?;
    say(out, &manifest.display().to_string())
}

pub fn cmd_localize(a: &LocalizeArgs, out: &mut dyn Write) -> Result<()> {
    let (_, regions) = frame_regions(&a.frames, None, a.face.face_box)?;
    let rows: Vec<_> = regions.iter().map(|r| r.roi).enumerate().collect();
    emit(out, a.out.as_deref(), &format_roi_csv(&rows))
}

pub fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> Result<()> {
    let (frames, regions) = frame_regions(&a.frames, a.roi.as_deref(), a.face.face_box)?;
    let mut sig = extract_signature(&frames, &regions)?;
    sig.label = a.label.clone();
    if let Some(s) = &a.subject {
        sig = sig.with_subject(s, a.session);
    }
    emit(out, a.out.as_deref(), &sig.to_csv_string())
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let cfg = a.model.pipeline()?;
    let sigs = harness::signatures_from_manifest(&manifest)?;
    let mut index = TrainingIndex::new(sigs, cfg.distance, cfg.k)?;
    if cfg.tune_weights {
        let w = tune_weights(&index)?;
        index = index.with_weights(w);
    }
    index.save(&a.out)?;
    say(out, &format!("trained {} examples -> {}", index.len(), a.out.display()))
}

pub fn cmd_classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let mut index = TrainingIndex::load(&a.model)?;
    if let Some(k) = a.k {
        index.k = k.min(index.len());
    }
    let probe = match (&a.signature, &a.frames) {
        (Some(s), _) => WordSignature::read_csv(s)?,
        (None, Some(dir)) => {
            let (frames, regions) = frame_regions(dir, a.roi.as_deref(), None)?;
            extract_signature(&frames, &regions)?
        }
        (None, None) => return Err(Error::Config("one of --signature or --frames is required".into())),
    };
    let p = classify(&index, &probe)?;
    let mut text = format!("{} {:.6}\nrank,label,distance\n", p.label, p.distance());
    for (i, n) in p.neighbours.iter().enumerate() {
        let _ = writeln!(text, "{},{},{:.6}", i + 1, n.label, n.distance);
    }
    emit(out, None, &text)
}

pub fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let cfg = a.model.pipeline()?;
    let sigs = harness::signatures_from_manifest(&manifest)?;
    let report = harness::evaluate(&sigs, a.protocol, &cfg)?;
    report.write(&a.out, a.protocol.name())?;
    emit(out, None, &report.to_table())
}

/// Long-format `frame,signal,value` rows.
pub fn plot_csv(sig: &WordSignature) -> String {
    let mut text = String::from("frame,signal,value\n");
    for (i, row) in sig.rows().iter().enumerate() {
        for (name, v) in SIGNAL_NAMES.iter().zip(row) {
            let _ = writeln!(text, "{i},{name},{v:.6}");
        }
    }
    text
}

pub fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    let sig = WordSignature::read_csv(&a.signature)?;
    emit(out, a.out.as_deref(), &plot_csv(&sig))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.seed, out),
        Command::Localize(a) => cmd_localize(a, out),
        Command::Extract(a) => cmd_extract(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Plot(a) => cmd_plot(a, out),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
