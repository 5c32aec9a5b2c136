//! Per-frame mouth features and the normalized word signature.
//!
//! Eight signals per frame, in column order:
//!
//! | column | signal | meaning |
//! |--------|--------|---------|
//! | H  | height | lip box height in pixels |
//! | W  | width  | lip box width in pixels |
//! | M  | mutual information | Haar sub-band MI against the previous ROI |
//! | Q  | quality | Haar sub-band quality index against the previous ROI |
//! | R  | wavelet ratio | vertical (HL) over horizontal (LH) feature points |
//! | ER | edge ratio | Sobel vertical over horizontal edge energy |
//! | RC | red colour | mean red channel inside the ellipse |
//! | T  | teeth | low a*/u* pixel count inside the ellipse |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, sobel_sums, to_lab_luv, EllipseMask, Frame};
use crate::localize::LipRegion;
use crate::transforms::{count_feature_points, haar_dwt, mutual_information, quality_index, subband_average};

pub const NUM_SIGNALS: usize = 8;
pub const SIGNAL_NAMES: [&str; NUM_SIGNALS] = ["H", "W", "M", "Q", "R", "ER", "RC", "T"];
/// Side of the square both ROIs are rescaled to before the temporal measures.
pub const TEMPORAL_SIZE: usize = 50;
const EDGE_EPS: f64 = 1e-6;

/// Raw (un-normalized) features of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFeatures {
    pub h: f64,
    pub w: f64,
    pub m: f64,
    pub q: f64,
    pub r: f64,
    pub er: f64,
    pub rc: f64,
    pub t: f64,
}

impl FrameFeatures {
    pub fn to_array(&self) -> [f64; NUM_SIGNALS] {
        [self.h, self.w, self.m, self.q, self.r, self.er, self.rc, self.t]
    }
}

/// A word as `n` rows of eight signals, each column min-max normalized
/// over the word's own frames.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSignature {
    pub label: Option<String>,
    pub subject: Option<String>,
    pub session: Option<u8>,
    rows: Vec<[f64; NUM_SIGNALS]>,
}

impl WordSignature {
    pub fn new(rows: Vec<[f64; NUM_SIGNALS]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dimension("signature needs at least one frame".into()));
        }
        Ok(WordSignature {
            label: None,
            subject: None,
            session: None,
            rows,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_subject(mut self, subject: impl Into<String>, session: u8) -> Self {
        self.subject = Some(subject.into());
        self.session = Some(session);
        self
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[[f64; NUM_SIGNALS]] {
        &self.rows
    }

    pub fn column(&self, signal: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[signal]).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut meta = Vec::new();
        if let Some(l) = &self.label {
            meta.push(format!("label={l}"));
        }
        if let Some(s) = &self.subject {
            meta.push(format!("subject={s}"));
        }
        if let Some(s) = self.session {
            meta.push(format!("session={s}"));
        }
        if !meta.is_empty() {
            let _ = writeln!(out, "# {}", meta.join(" "));
        }
        out.push_str("frame,H,W,M,Q,R,ER,RC,T\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut sig = WordSignature {
            label: None,
            subject: None,
            session: None,
            rows: Vec::new(),
        };
        let mut seen_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("label", v)) => sig.label = Some(v.to_string()),
                        Some(("subject", v)) => sig.subject = Some(v.to_string()),
                        Some(("session", v)) => {
                            sig.session = Some(
                                v.parse()
                                    .map_err(|_| Error::parse(origin, format!("bad session {v:?}")))?,
                            )
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                if line != "frame,H,W,M,Q,R,ER,RC,T" {
                    return Err(Error::parse(
                        origin,
                        format!("line {}: unexpected header {line:?}", lineno + 1),
                    ));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != NUM_SIGNALS + 1 {
                return Err(Error::parse(origin, format!("line {}: expected 9 fields", lineno + 1)));
            }
            let mut row = [0.0; NUM_SIGNALS];
            for (slot, f) in row.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(origin, format!("line {}: bad number {f:?}", lineno + 1)))?;
            }
            sig.rows.push(row);
        }
        if sig.rows.is_empty() {
            return Err(Error::parse(origin, "signature has no frames"));
        }
        Ok(sig)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WordSignature::parse_csv(&text, path)
    }
}

pub fn geometry(region: &LipRegion) -> (f64, f64) {
    (region.roi.h as f64, region.roi.w as f64)
}

/// Crop to the ROI and replace everything outside the inscribed ellipse
/// with the mean inside colour.
pub fn masked_roi(frame: &Frame, region: &LipRegion) -> Result<Frame> {
    let mut roi = frame.crop(region.roi)?;
    let ellipse = &region.ellipse;
    let mut sum = [0u64; 3];
    let mut count = 0u64;
    for y in 0..roi.height() {
        for x in 0..roi.width() {
            if ellipse.contains(x, y) {
                let p = roi.get(x, y);
                for c in 0..3 {
                    sum[c] += p[c] as u64;
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return Ok(roi);
    }
    let fill = [0, 1, 2].map(|c| ((sum[c] as f64 / count as f64).round()) as u8);
    for y in 0..roi.height() {
        for x in 0..roi.width() {
            if !ellipse.contains(x, y) {
                roi.set(x, y, fill);
            }
        }
    }
    Ok(roi)
}

/// `(M, Q)` of the current ROI against its predecessor: both rescaled to
/// 50x50 luma, Haar-decomposed, measured per sub-band and averaged.
pub fn temporal_pair_features(cur_roi: &Frame, prev_roi: &Frame) -> Result<(f64, f64)> {
    let cur = haar_dwt(&resize_bilinear(&cur_roi.to_gray(), TEMPORAL_SIZE, TEMPORAL_SIZE)?);
    let prev = haar_dwt(&resize_bilinear(&prev_roi.to_gray(), TEMPORAL_SIZE, TEMPORAL_SIZE)?);
    let m = subband_average(mutual_information, &cur, &prev)?;
    let q = subband_average(quality_index, &cur, &prev)?;
    Ok((m, q))
}

/// Vertical (HL) over horizontal (LH) Haar feature points, each count +1.
pub fn ratio_wavelet(roi: &Frame) -> f64 {
    let quad = haar_dwt(&roi.to_gray());
    (count_feature_points(&quad.hl) + 1) as f64 / (count_feature_points(&quad.lh) + 1) as f64
}

pub fn ratio_edges(roi: &Frame) -> Result<f64> {
    let (sv, sh) = sobel_sums(&roi.to_gray())?;
    Ok((sv + EDGE_EPS) / (sh + EDGE_EPS))
}

/// Mean of `R / 255` over the ellipse interior.
pub fn red_amount(roi: &Frame, ellipse: &EllipseMask) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 0..roi.height().min(ellipse.rect.h) {
        for x in 0..roi.width().min(ellipse.rect.w) {
            if ellipse.contains(x, y) {
                sum += roi.get(x, y)[0] as f64 / 255.0;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Pixels with `a* < mean_a - std_a` or `u* < mean_u - std_u`.
pub fn teeth_rule(a: &[f64], u: &[f64]) -> usize {
    let (ma, sa) = mean_std(a);
    let (mu, su) = mean_std(u);
    a.iter()
        .zip(u)
        .filter(|(&av, &uv)| av < ma - sa || uv < mu - su)
        .count()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Teeth-pixel count over the ellipse interior.
pub fn teeth_amount(roi: &Frame, ellipse: &EllipseMask) -> usize {
    let mut a = Vec::new();
    let mut u = Vec::new();
    for y in 0..roi.height().min(ellipse.rect.h) {
        for x in 0..roi.width().min(ellipse.rect.w) {
            if ellipse.contains(x, y) {
                let (la, lu) = to_lab_luv(roi.get(x, y));
                a.push(la);
                u.push(lu);
            }
        }
    }
    teeth_rule(&a, &u)
}

/// Single-frame features; the temporal pair is filled in later.
struct StaticFeatures {
    roi: Frame,
    h: f64,
    w: f64,
    r: f64,
    er: f64,
    rc: f64,
    t: f64,
}

fn static_features(frame: &Frame, region: &LipRegion) -> Result<StaticFeatures> {
    let roi = masked_roi(frame, region)?;
    let (h, w) = geometry(region);
    let er = if roi.width() >= 3 && roi.height() >= 3 {
        ratio_edges(&roi)?
    } else {
        1.0
    };
    Ok(StaticFeatures {
        r: ratio_wavelet(&roi),
        er,
        rc: red_amount(&roi, &region.ellipse),
        t: teeth_amount(&roi, &region.ellipse) as f64,
        roi,
        h,
        w,
    })
}

/// Raw features for a frame sequence. Frame 0 borrows frame 1's temporal
/// pair; a single-frame word gets `M = 0, Q = 1`.
pub fn raw_features(frames: &[Frame], regions: &[LipRegion]) -> Result<Vec<FrameFeatures>> {
    if frames.len() != regions.len() {
        return Err(Error::Dimension(format!(
            "{} frames but {} lip regions",
            frames.len(),
            regions.len()
        )));
    }
    if frames.is_empty() {
        return Err(Error::Dimension("word has no frames".into()));
    }
    let statics = frames
        .iter()
        .zip(regions)
        .map(|(f, r)| static_features(f, r))
        .collect::<Result<Vec<_>>>()?;

    let mut temporal = vec![(0.0, 1.0); statics.len()];
    for i in 1..statics.len() {
        temporal[i] = temporal_pair_features(&statics[i].roi, &statics[i - 1].roi)?;
    }
    if statics.len() > 1 {
        temporal[0] = temporal[1];
    }

    Ok(statics
        .iter()
        .zip(temporal)
        .map(|(s, (m, q))| FrameFeatures {
            h: s.h,
            w: s.w,
            m,
            q,
            r: s.r,
            er: s.er,
            rc: s.rc,
            t: s.t,
        })
        .collect())
}

/// Per-column min-max to `[0, 1]`; constant columns become 0.5.
pub fn normalize_columns(raw: &[[f64; NUM_SIGNALS]]) -> Vec<[f64; NUM_SIGNALS]> {
    let mut out = raw.to_vec();
    for c in 0..NUM_SIGNALS {
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r[c]), hi.max(r[c]))
        });
        for row in out.iter_mut() {
            row[c] = if hi > lo {
                ((row[c] - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }
    out
}

pub fn extract_signature(frames: &[Frame], regions: &[LipRegion]) -> Result<WordSignature> {
    let raw: Vec<_> = raw_features(frames, regions)?
        .iter()
        .map(FrameFeatures::to_array)
        .collect();
    WordSignature::new(normalize_columns(&raw))
}
