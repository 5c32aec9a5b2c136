//! Synthetic talking-mouth sequences with ground-truth lip boxes.
//!
//! Every word class owns a scripted trajectory: mouth opening and lateral
//! stretch are piecewise sinusoids through class-specific knots, plus
//! intervals where teeth or tongue are visible. Each speaker perturbs the
//! knots, tempo, amplitude and colours; each utterance adds a little
//! jitter on top. Frames are skin background, outer lip ellipse, dark inner
//! mouth, optional teeth band and tongue blob, and Gaussian pixel noise.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Utterance};
use crate::error::{Error, Result};
use crate::imaging::io::write_frame;
use crate::imaging::{BoundingBox, Frame, Rgb};
use crate::localize::write_roi_file;

const KNOTS: usize = 6;
const WORD_NAMES: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

const INNER_MOUTH: Rgb = [55, 22, 28];
const TEETH: Rgb = [236, 232, 224];
const TONGUE: Rgb = [205, 72, 86];

/// Ground-truth file written next to each utterance's frames.
pub const TRUTH_FILE: &str = "roi_gt.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub vocabulary_size: usize,
    pub speakers: usize,
    /// Repetitions of every word per session (two sessions are rendered).
    pub repetitions: usize,
    pub frames_min: usize,
    pub frames_max: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Standard deviation of the per-speaker knot perturbation.
    pub speaker_variation: f64,
    /// Indices of low-amplitude ("visually speechless") speakers.
    pub vsp_speakers: Vec<usize>,
    pub vsp_amplitude: f64,
    /// Per-repetition trajectory and tempo variation; 0 repeats a word
    /// exactly within a session.
    pub utterance_jitter: f64,
    /// Give every speaker the parameters of the first one. Utterance
    /// jitter, session drift and pixel noise still differ.
    pub clone_speakers: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocabulary_size: 10,
            speakers: 3,
            repetitions: 5,
            frames_min: 12,
            frames_max: 30,
            noise_sigma: 4.0,
            seed: 7,
            width: 160,
            height: 120,
            speaker_variation: 0.35,
            vsp_speakers: Vec::new(),
            vsp_amplitude: 0.08,
            utterance_jitter: 0.05,
            clone_speakers: false,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("vocabulary_size", self.vocabulary_size),
            ("speakers", self.speakers),
            ("repetitions", self.repetitions),
            ("frames_min", self.frames_min),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.frames_max < self.frames_min {
            return Err(Error::Config("frames_max must be >= frames_min".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be a non-negative number".into()));
        }
        if !(self.speaker_variation >= 0.0 && self.speaker_variation.is_finite()) {
            return Err(Error::Config("speaker_variation must be a non-negative number".into()));
        }
        if !(0.0..=0.5).contains(&self.utterance_jitter) {
            return Err(Error::Config("utterance_jitter must lie in [0, 0.5]".into()));
        }
        if self.width < 32 || self.height < 32 {
            return Err(Error::Config(format!(
                "image must be at least 32x32, got {}x{}",
                self.width, self.height
            )));
        }
        if let Some(&s) = self.vsp_speakers.iter().find(|&&s| s >= self.speakers) {
            return Err(Error::Config(format!("vsp speaker index {s} out of range")));
        }
        Ok(())
    }

    pub fn word_label(&self, word: usize) -> String {
        if self.vocabulary_size <= WORD_NAMES.len() {
            WORD_NAMES[word].to_string()
        } else {
            format!("word{word:02}")
        }
    }

    fn parameter_source(&self, speaker: usize) -> usize {
        if self.clone_speakers {
            0
        } else {
            speaker
        }
    }

    pub fn subject_id(&self, speaker: usize) -> String {
        format!("S{:02}", speaker + 1)
    }
}

/// splitmix64 finalizer, to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let s = parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ p));
    ChaCha8Rng::seed_from_u64(s)
}

#[derive(Debug, Clone)]
struct Trajectory {
    open: [f64; KNOTS],
    stretch: [f64; KNOTS],
    teeth: Option<(f64, f64)>,
    tongue: Option<(f64, f64)>,
    length: f64,
}

/// Piecewise raised-cosine interpolation through knots spread over
/// `(0, 1)`, pinned to zero at both ends.
fn sinusoid_path(knots: &[f64; KNOTS], t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let segs = KNOTS + 1;
    let pos = t * segs as f64;
    let i = (pos.floor() as usize).min(segs - 1);
    let frac = pos - i as f64;
    let at = |k: usize| if k == 0 || k == segs { 0.0 } else { knots[k - 1] };
    let (a, b) = (at(i), at(i + 1));
    a + (b - a) * (1.0 - (PI * frac).cos()) / 2.0
}

fn interval(rng: &mut ChaCha8Rng, p: f64) -> Option<(f64, f64)> {
    if rng.random::<f64>() < p {
        let len = rng.random_range(0.15..0.35);
        let start = rng.random_range(0.1..(0.9 - len));
        Some((start, start + len))
    } else {
        None
    }
}

fn word_trajectory(cfg: &SynthConfig, word: usize) -> Trajectory {
    let mut rng = stream(cfg.seed, &[1, word as u64]);
    let open = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let stretch = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let teeth = interval(&mut rng, 0.6);
    let tongue = interval(&mut rng, 0.4);
    let lo = cfg.frames_min as f64;
    let hi = cfg.frames_max as f64;
    let length = if hi > lo {
        rng.random_range(lo + (hi - lo) * 0.2..=hi - (hi - lo) * 0.2)
    } else {
        lo
    };
    Trajectory {
        open,
        stretch,
        teeth,
        tongue,
        length,
    }
}

#[derive(Debug, Clone)]
struct Speaker {
    amplitude: f64,
    tempo: f64,
    skin: [f64; 3],
    lip: [f64; 3],
    mouth_width: f64,
    lip_thickness: f64,
    centre: (f64, f64),
}

fn speaker_model(cfg: &SynthConfig, speaker: usize) -> Speaker {
    let mut rng = stream(cfg.seed, &[2, cfg.parameter_source(speaker) as u64]);
    let n = |rng: &mut ChaCha8Rng, s: f64| Normal::new(0.0, s).unwrap().sample(rng);
    let vsp = cfg.vsp_speakers.contains(&speaker);
    let amplitude = if vsp {
        cfg.vsp_amplitude
    } else {
        (1.0 + n(&mut rng, 0.08)).clamp(0.8, 1.2)
    };
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    Speaker {
        amplitude,
        tempo: rng.random_range(0.85..1.15),
        skin: [
            200.0 + n(&mut rng, 10.0),
            150.0 + n(&mut rng, 8.0),
            122.0 + n(&mut rng, 8.0),
        ],
        lip: [
            188.0 + n(&mut rng, 8.0),
            62.0 + n(&mut rng, 6.0),
            80.0 + n(&mut rng, 6.0),
        ],
        mouth_width: w * rng.random_range(0.24..0.30),
        lip_thickness: h * rng.random_range(0.035..0.05),
        centre: (w * 0.5 + n(&mut rng, w * 0.02), h * 0.72 + n(&mut rng, h * 0.015)),
    }
}

fn perturb(knots: &[f64; KNOTS], rng: &mut ChaCha8Rng, sigma: f64, lo: f64, hi: f64) -> [f64; KNOTS] {
    if sigma == 0.0 {
        return *knots;
    }
    let normal = Normal::new(0.0, sigma).unwrap();
    knots.map(|k| (k + normal.sample(rng)).clamp(lo, hi))
}

/// A word as spoken by one speaker (before per-utterance jitter).
fn speaker_word(cfg: &SynthConfig, word: &Trajectory, speaker: usize, word_idx: usize) -> Trajectory {
    let mut rng = stream(cfg.seed, &[3, cfg.parameter_source(speaker) as u64, word_idx as u64]);
    let v = cfg.speaker_variation;
    let shift = |iv: Option<(f64, f64)>, rng: &mut ChaCha8Rng| {
        iv.map(|(a, b)| {
            let d = if v > 0.0 {
                Normal::new(0.0, v * 0.15).unwrap().sample(rng)
            } else {
                0.0
            };
            ((a + d).clamp(0.0, 0.95), (b + d).clamp(0.05, 1.0))
        })
    };
    Trajectory {
        open: perturb(&word.open, &mut rng, v, 0.0, 1.0),
        stretch: perturb(&word.stretch, &mut rng, v * 1.5, -1.0, 1.0),
        teeth: shift(word.teeth, &mut rng),
        tongue: shift(word.tongue, &mut rng),
        length: word.length,
    }
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub subject: String,
    pub session: u8,
    pub word: String,
    pub repetition: usize,
    pub frames: Vec<Frame>,
    /// Tight box of the rendered outer lip for every frame.
    pub truth: Vec<BoundingBox>,
}

impl SynthUtterance {
    pub fn dir_name(&self) -> String {
        format!(
            "{}/s{}/{}_r{:02}",
            self.subject, self.session, self.word, self.repetition
        )
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub utterances: Vec<SynthUtterance>,
}

impl SynthDataset {
    pub fn frame_count(&self) -> usize {
        self.utterances.iter().map(|u| u.frames.len()).sum()
    }
}

struct MouthState {
    centre: (f64, f64),
    outer: (f64, f64),
    opening: f64,
    teeth: bool,
    tongue: bool,
}

#[inline]
fn in_ellipse(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> bool {
    if a <= 0.0 || b <= 0.0 {
        return false;
    }
    let dx = (x - cx) / a;
    let dy = (y - cy) / b;
    dx * dx + dy * dy <= 1.0
}

fn render_frame(
    cfg: &SynthConfig,
    lip: [f64; 3],
    skin: [f64; 3],
    m: &MouthState,
    rng: &mut ChaCha8Rng,
) -> (Frame, BoundingBox) {
    let (w, h) = (cfg.width, cfg.height);
    let (cx, cy) = m.centre;
    let (oa, ob) = m.outer;
    let inner_a = oa * 0.72;
    let inner_b = m.opening / 2.0;
    let inner_top = cy - inner_b;
    let teeth_bottom = inner_top + (m.opening * 0.38).max(2.0);
    let (tongue_cy, tongue_a, tongue_b) = (cy + inner_b * 0.55, inner_a * 0.5, inner_b * 0.5);
    let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).unwrap());

    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        let py = y as f64 + 0.5;
        // gentle top-to-bottom shading
        let shade = 1.0 + 0.06 * (0.5 - py / h as f64);
        for x in 0..w {
            let px = x as f64 + 0.5;
            let mut c = [skin[0] * shade, skin[1] * shade, skin[2] * shade];
            if in_ellipse(px, py, cx, cy, oa, ob) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
                c = lip;
                if in_ellipse(px, py, cx, cy, inner_a, inner_b) {
                    c = INNER_MOUTH.map(f64::from);
                    if m.teeth && py < teeth_bottom {
                        c = TEETH.map(f64::from);
                    }
                    if m.tongue && in_ellipse(px, py, cx, tongue_cy, tongue_a, tongue_b) {
                        c = TONGUE.map(f64::from);
                    }
                }
            }
            if let Some(n) = &noise {
                for v in c.iter_mut() {
                    *v += n.sample(rng);
                }
            }
            pixels.push(c.map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    let frame = Frame::new(w, h, pixels).expect("dims validated");
    let truth = BoundingBox {
        x: x0,
        y: y0,
        w: x1 - x0 + 1,
        h: y1 - y0 + 1,
    };
    (frame, truth)
}

fn render_utterance(
    cfg: &SynthConfig,
    spk: &Speaker,
    traj: &Trajectory,
    ids: (usize, u8, usize, usize),
) -> SynthUtterance {
    let (speaker, session, word, rep) = ids;
    let mut rng = stream(cfg.seed, &[4, speaker as u64, session as u64, word as u64, rep as u64]);
    let jitter = cfg.utterance_jitter;
    let open = perturb(&traj.open, &mut rng, jitter, 0.0, 1.0);
    let stretch = perturb(&traj.stretch, &mut rng, jitter, -1.0, 1.0);
    let pace = if jitter > 0.0 {
        1.0 + 1.6 * jitter * rng.random_range(-1.0..1.0)
    } else {
        1.0
    };
    let n = ((traj.length * spk.tempo * pace).round() as usize).clamp(cfg.frames_min, cfg.frames_max);

    // sessions differ slightly in lighting and head position
    let mut srng = stream(cfg.seed, &[5, speaker as u64, session as u64]);
    let light = 1.0 + srng.random_range(-0.03..0.03);
    let offset = (srng.random_range(-2.0..2.0), srng.random_range(-1.5..1.5));
    let skin = spk.skin.map(|v| v * light);
    let lip = spk.lip.map(|v| v * light);

    let max_open = cfg.height as f64 * 0.2;
    let mut frames = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let opening = spk.amplitude * sinusoid_path(&open, t) * max_open;
        let st = spk.amplitude * sinusoid_path(&stretch, t);
        let half_w = spk.mouth_width / 2.0 * (1.0 + 0.22 * st);
        let half_h = spk.lip_thickness + opening / 2.0;
        let visible = |iv: Option<(f64, f64)>| opening >= 3.0 && iv.is_some_and(|(a, b)| t >= a && t <= b);
        let state = MouthState {
            centre: (spk.centre.0 + offset.0, spk.centre.1 + offset.1),
            outer: (half_w, half_h),
            opening,
            teeth: visible(traj.teeth),
            tongue: visible(traj.tongue),
        };
        let (f, b) = render_frame(cfg, lip, skin, &state, &mut rng);
        frames.push(f);
        truth.push(b);
    }
    SynthUtterance {
        subject: cfg.subject_id(speaker),
        session,
        word: cfg.word_label(word),
        repetition: rep,
        frames,
        truth,
    }
}

/// Renders the whole dataset in memory: speakers x sessions 1-2 x words x
/// repetitions. Deterministic in `cfg.seed`.
pub fn generate_in_memory(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let words: Vec<Trajectory> = (0..cfg.vocabulary_size).map(|w| word_trajectory(cfg, w)).collect();
    let mut utterances = Vec::new();
    for speaker in 0..cfg.speakers {
        let spk = speaker_model(cfg, speaker);
        let spoken: Vec<Trajectory> = words
            .iter()
            .enumerate()
            .map(|(i, w)| speaker_word(cfg, w, speaker, i))
            .collect();
        for session in 1..=2u8 {
            for (word, traj) in spoken.iter().enumerate() {
                for rep in 0..cfg.repetitions {
                    utterances.push(render_utterance(cfg, &spk, traj, (speaker, session, word, rep)));
                }
            }
        }
    }
    Ok(SynthDataset {
        config: cfg.clone(),
        utterances,
    })
}

/// Renders the dataset and writes frames, per-utterance ground truth and
/// `manifest.json` under `out`. Returns the manifest path.
pub fn generate(cfg: &SynthConfig, out: &Path) -> Result<std::path::PathBuf> {
    let data = generate_in_memory(cfg)?;
    write_dataset(&data, out)
}

pub fn write_dataset(data: &SynthDataset, out: &Path) -> Result<std::path::PathBuf> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut utterances = Vec::with_capacity(data.utterances.len());
    for u in &data.utterances {
        let rel = Path::new("frames").join(u.dir_name());
        let dir = out.join(&rel);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, f) in u.frames.iter().enumerate() {
            write_frame(f, &dir.join(format!("frame_{i:04}.png")))?;
        }
        let rows: Vec<_> = u.truth.iter().copied().enumerate().collect();
        write_roi_file(&dir.join(TRUTH_FILE), &rows)?;
        utterances.push(Utterance {
            subject: u.subject.clone(),
            session: u.session,
            word: u.word.clone(),
            frames_dir: rel,
            face_box: None,
            roi_file: None,
        });
    }
    let manifest = DatasetManifest {
        name: format!("synthetic-seed{}", data.config.seed),
        utterances,
        root: out.to_path_buf(),
    };
    let path = out.join("manifest.json");
    manifest.save(&path)?;
    let cfg_path = out.join("synth_config.json");
    let cfg_json = serde_json::to_string_pretty(&data.config).map_err(|e| Error::json(&cfg_path, e))?;
    fs::write(&cfg_path, cfg_json + "\n").map_err(|e| Error::io(&cfg_path, e))?;
    Ok(path)
}
