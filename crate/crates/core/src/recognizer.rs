//! Signal distances, weighted score fusion and k-nearest-neighbour voting.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{WordSignature, NUM_SIGNALS, SIGNAL_NAMES};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_INTERP_LEN: usize = 32;
/// Candidate values for each weight during tuning.
pub const WEIGHT_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Accumulated DTW cost with `|a_i - b_j|` local cost and unit steps
/// right, down and diagonal.
pub fn dtw_cost(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Dimension("dtw needs non-empty sequences".into()));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &ai in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = (ai - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// DTW cost divided by `|a| + |b|`.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(dtw_cost(a, b)? / (a.len() + b.len()) as f64)
}

/// Corner-aligned linear resampling to `len` points.
pub fn resample_linear(s: &[f64], len: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Dimension("cannot resample an empty sequence".into()));
    }
    if len < 2 {
        return Err(Error::Dimension(format!("resample length must be >= 2, got {len}")));
    }
    if s.len() == len {
        return Ok(s.to_vec());
    }
    if s.len() == 1 {
        return Ok(vec![s[0]; len]);
    }
    let scale = (s.len() - 1) as f64 / (len - 1) as f64;
    Ok((0..len)
        .map(|i| {
            if i == len - 1 {
                return s[s.len() - 1];
            }
            let pos = i as f64 * scale;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(s.len() - 1);
            let t = pos - lo as f64;
            s[lo] * (1.0 - t) + s[hi] * t
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    #[default]
    Dtw,
    Interp,
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMode::Dtw => "dtw",
            DistanceMode::Interp => "interp",
        })
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtw" => Ok(DistanceMode::Dtw),
            "interp" => Ok(DistanceMode::Interp),
            other => Err(Error::Config(format!("unknown distance mode {other:?} (dtw|interp)"))),
        }
    }
}

/// One non-negative weight per signal, in `SIGNAL_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FusionWeights([f64; NUM_SIGNALS]);

impl FusionWeights {
    pub fn new(w: [f64; NUM_SIGNALS]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("weights must be finite and non-negative: {w:?}")));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("weights must not all be zero".into()));
        }
        Ok(FusionWeights(w))
    }

    pub fn uniform() -> Self {
        FusionWeights([1.0; NUM_SIGNALS])
    }

    pub fn one_hot(signal: usize) -> Self {
        let mut w = [0.0; NUM_SIGNALS];
        w[signal] = 1.0;
        FusionWeights(w)
    }

    pub fn values(&self) -> &[f64; NUM_SIGNALS] {
        &self.0
    }

    /// Fused distance `sum w_f d_f / sum w_f`.
    pub fn fuse(&self, per_signal: &[f64; NUM_SIGNALS]) -> f64 {
        let total: f64 = self.0.iter().sum();
        self.0.iter().zip(per_signal).map(|(w, d)| w * d).sum::<f64>() / total
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights::uniform()
    }
}

impl TryFrom<Vec<f64>> for FusionWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let arr: [f64; NUM_SIGNALS] = v
            .try_into()
            .map_err(|v: Vec<f64>| Error::Config(format!("expected 8 weights, got {}", v.len())))?;
        FusionWeights::new(arr)
    }
}

impl From<FusionWeights> for Vec<f64> {
    fn from(w: FusionWeights) -> Self {
        w.0.to_vec()
    }
}

impl FromStr for FusionWeights {
    type Err = Error;

    /// Comma-separated list of eight numbers.
    fn from_str(s: &str) -> Result<Self> {
        let parsed = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad weight {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        FusionWeights::try_from(parsed)
    }
}

/// Everything that determines the distance between two signatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub mode: DistanceMode,
    pub interp_len: usize,
    pub weights: FusionWeights,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            mode: DistanceMode::Dtw,
            interp_len: DEFAULT_INTERP_LEN,
            weights: FusionWeights::uniform(),
        }
    }
}

/// Distance between two signals under a mode.
pub fn signal_distance(a: &[f64], b: &[f64], mode: DistanceMode, interp_len: usize) -> Result<f64> {
    match mode {
        DistanceMode::Dtw => dtw(a, b),
        DistanceMode::Interp => {
            let ra = resample_linear(a, interp_len)?;
            let rb = resample_linear(b, interp_len)?;
            let sq: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
            Ok(sq.sqrt() / (interp_len as f64).sqrt())
        }
    }
}

/// The eight unfused per-signal distances.
pub fn per_signal_distances(
    u: &WordSignature,
    v: &WordSignature,
    mode: DistanceMode,
    interp_len: usize,
) -> Result<[f64; NUM_SIGNALS]> {
    let mut d = [0.0; NUM_SIGNALS];
    for (f, slot) in d.iter_mut().enumerate() {
        *slot = signal_distance(&u.column(f), &v.column(f), mode, interp_len)?;
    }
    Ok(d)
}

pub fn signature_distance(u: &WordSignature, v: &WordSignature, cfg: &DistanceConfig) -> Result<f64> {
    let d = per_signal_distances(u, v, cfg.mode, cfg.interp_len)?;
    Ok(cfg.weights.fuse(&d))
}

/// Labelled training signatures plus the fusion/KNN settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingIndex {
    examples: Vec<WordSignature>,
    labels: Vec<String>,
    pub weights: FusionWeights,
    pub mode: DistanceMode,
    pub k: usize,
    pub interp_len: usize,
}

/// Serialized form of `index.json`.
#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    mode: DistanceMode,
    k: usize,
    weights: FusionWeights,
    interp_len: usize,
    examples: Vec<String>,
}

/// Round to the six decimals the signature CSV stores.
fn quantize_signature(sig: &WordSignature) -> WordSignature {
    let rows = sig
        .rows()
        .iter()
        .map(|r| r.map(|v| format!("{v:.6}").parse::<f64>().expect("formatted float parses")))
        .collect();
    let mut q = WordSignature::new(rows).expect("non-empty");
    q.label = sig.label.clone();
    q.subject = sig.subject.clone();
    q.session = sig.session;
    q
}

impl TrainingIndex {
    /// Builds an index; every example needs a label. Stored rows are
    /// rounded to six decimals so a saved model reloads identically, and
    /// `k` is capped at the number of examples.
    pub fn new(examples: Vec<WordSignature>, cfg: DistanceConfig, k: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Model("training index has no examples".into()));
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if cfg.interp_len < 2 {
            return Err(Error::Config("interp_len must be at least 2".into()));
        }
        let labels = examples
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.label
                    .clone()
                    .ok_or_else(|| Error::Model(format!("training example {i} has no label")))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = k.min(examples.len());
        Ok(TrainingIndex {
            examples: examples.iter().map(quantize_signature).collect(),
            labels,
            weights: cfg.weights,
            mode: cfg.mode,
            k,
            interp_len: cfg.interp_len,
        })
    }

    pub fn examples(&self) -> &[WordSignature] {
        &self.examples
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn distance_config(&self) -> DistanceConfig {
        DistanceConfig {
            mode: self.mode,
            interp_len: self.interp_len,
            weights: self.weights,
        }
    }

    pub fn with_weights(mut self, weights: FusionWeights) -> Self {
        self.weights = weights;
        self
    }

    /// Writes `index.json` and one CSV per example under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let ex_dir = dir.join("examples");
        fs::create_dir_all(&ex_dir).map_err(|e| Error::io(&ex_dir, e))?;
        let mut names = Vec::with_capacity(self.examples.len());
        for (i, ex) in self.examples.iter().enumerate() {
            let name = format!("examples/{i:05}.csv");
            ex.write_csv(&dir.join(&name))?;
            names.push(name);
        }
        let file = IndexFile {
            mode: self.mode,
            k: self.k,
            weights: self.weights,
            interp_len: self.interp_len,
            examples: names,
        };
        let path = dir.join("index.json");
        let mut json = serde_json::to_string_pretty(&file).map_err(|e| Error::json(&path, e))?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("index.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: IndexFile = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{} is not a model index: {e}", path.display())))?;
        let examples = file
            .examples
            .iter()
            .map(|name| WordSignature::read_csv(&dir.join(name)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = DistanceConfig {
            mode: file.mode,
            interp_len: file.interp_len,
            weights: file.weights,
        };
        TrainingIndex::new(examples, cfg, file.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbour {
    pub label: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    /// The `k` nearest, ascending by distance.
    pub neighbours: Vec<Neighbour>,
    pub votes: BTreeMap<String, usize>,
}

impl Prediction {
    pub fn distance(&self) -> f64 {
        self.neighbours
            .iter()
            .find(|n| n.label == self.label)
            .map(|n| n.distance)
            .unwrap_or(f64::INFINITY)
    }
}

/// Majority vote over the `k` nearest of `candidates`. Ties go to the
/// label with the smaller summed distance, then to the lexicographically
/// smaller label.
pub fn vote(mut candidates: Vec<Neighbour>, k: usize) -> Result<Prediction> {
    if candidates.is_empty() {
        return Err(Error::Model("no candidates to vote over".into()));
    }
    candidates.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.label.cmp(&b.label)));
    candidates.truncate(k.max(1));

    let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for n in &candidates {
        let e = tally.entry(&n.label).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += n.distance;
    }
    // BTreeMap iterates labels in lexicographic order, so the first strict
    // winner is also the lexicographic tie-break
    let mut best: Option<(&str, usize, f64)> = None;
    for (&label, &(count, total)) in &tally {
        let better = match best {
            None => true,
            Some((_, bc, bt)) => count > bc || (count == bc && total < bt),
        };
        if better {
            best = Some((label, count, total));
        }
    }
    let label = best.expect("non-empty tally").0.to_string();
    let votes = tally.iter().map(|(l, (c, _))| (l.to_string(), *c)).collect();
    Ok(Prediction {
        label,
        neighbours: candidates,
        votes,
    })
}

pub fn classify(index: &TrainingIndex, probe: &WordSignature) -> Result<Prediction> {
    if index.is_empty() {
        return Err(Error::Model("training index is empty".into()));
    }
    let cfg = index.distance_config();
    let candidates = index
        .examples
        .iter()
        .zip(&index.labels)
        .map(|(ex, label)| {
            Ok(Neighbour {
                label: label.clone(),
                distance: signature_distance(probe, ex, &cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    vote(candidates, index.k)
}

/// Pairwise per-signal distance table over the training set.
struct DistanceTable {
    n: usize,
    d: Vec<[f64; NUM_SIGNALS]>,
}

impl DistanceTable {
    fn build(index: &TrainingIndex) -> Result<Self> {
        let n = index.len();
        let mut d = vec![[0.0; NUM_SIGNALS]; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = per_signal_distances(&index.examples[i], &index.examples[j], index.mode, index.interp_len)?;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(DistanceTable { n, d })
    }

    fn loo_accuracy(&self, labels: &[String], weights: &FusionWeights, k: usize) -> f64 {
        let mut correct = 0usize;
        for i in 0..self.n {
            let candidates = (0..self.n)
                .filter(|&j| j != i)
                .map(|j| Neighbour {
                    label: labels[j].clone(),
                    distance: weights.fuse(&self.d[i * self.n + j]),
                })
                .collect();
            if let Ok(p) = vote(candidates, k) {
                if p.label == labels[i] {
                    correct += 1;
                }
            }
        }
        correct as f64 / self.n as f64
    }
}

/// Leave-one-out accuracy of the index on its own examples.
pub fn leave_one_out_accuracy(index: &TrainingIndex) -> Result<f64> {
    let table = DistanceTable::build(index)?;
    Ok(table.loo_accuracy(
        &index.labels,
        &index.weights,
        index.k.min(index.len().saturating_sub(1)).max(1),
    ))
}

/// Coordinate grid search over `WEIGHT_GRID` maximizing leave-one-out
/// accuracy, starting from uniform weights and scanning signals in column
/// order. Only strict improvements are accepted.
pub fn tune_weights(index: &TrainingIndex) -> Result<FusionWeights> {
    let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &index.labels {
        *per_class.entry(l).or_default() += 1;
    }
    if let Some((label, count)) = per_class.iter().find(|(_, &c)| c < 2) {
        return Err(Error::Model(format!(
            "weight tuning needs at least 2 examples per class; {label:?} has {count}"
        )));
    }
    let table = DistanceTable::build(index)?;
    let k = index.k.min(index.len() - 1).max(1);
    let mut best = FusionWeights::uniform();
    let mut best_acc = table.loo_accuracy(&index.labels, &best, k);
    for _pass in 0..4 {
        let mut changed = false;
        for f in 0..NUM_SIGNALS {
            for &v in &WEIGHT_GRID {
                if v == best.0[f] {
                    continue;
                }
                let mut cand = best.0;
                cand[f] = v;
                let Ok(cand) = FusionWeights::new(cand) else { continue };
                let acc = table.loo_accuracy(&index.labels, &cand, k);
                if acc > best_acc {
                    best_acc = acc;
                    best = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    log::debug!(
        "tuned weights {:?} (loo accuracy {best_acc:.3})",
        SIGNAL_NAMES.iter().zip(best.0).collect::<Vec<_>>()
    );
    Ok(best)
}
