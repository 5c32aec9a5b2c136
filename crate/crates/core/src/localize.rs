//! Mouth localization: a YCbCr seed finds some part of the lips, then every
//! pixel of the search window is clustered lip / non-lip by its colour
//! distance to the seed's mean colour vector.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{chromaticity, hue, inscribe_ellipse, to_ycbcr, warp_hue, BoundingBox, EllipseMask, Frame, Rgb};

/// Fraction of search-window pixels marked as seed candidates.
pub const SEED_FRACTION: f64 = 0.10;
/// Acceptance radius is `mean + THRESHOLD_SIGMAS * std` of seed distances.
pub const THRESHOLD_SIGMAS: f64 = 1.5;
pub const THRESHOLD_FLOOR: f64 = 0.01;
/// A grown mask covering more than this share of the search window is
/// reported as low confidence.
const LOW_CONFIDENCE_COVERAGE: f64 = 0.4;

pub const CHANNELS: usize = 5;

/// Detected mouth: tight box, lip mask over the box and the inscribed
/// ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct LipRegion {
    pub roi: BoundingBox,
    lip_mask: Vec<bool>,
    pub ellipse: EllipseMask,
    pub seed_pixel_count: usize,
    pub low_confidence: bool,
}

impl LipRegion {
    /// Region from a known mouth box (annotation or override file); the
    /// lip mask is the inscribed ellipse.
    pub fn from_box(roi: BoundingBox) -> LipRegion {
        let ellipse = inscribe_ellipse(roi);
        LipRegion {
            roi,
            lip_mask: ellipse.mask().to_vec(),
            ellipse,
            seed_pixel_count: 0,
            low_confidence: false,
        }
    }

    /// Mask over `roi`, row-major with `roi.w` columns.
    pub fn lip_mask(&self) -> &[bool] {
        &self.lip_mask
    }

    pub fn lip_pixel_count(&self) -> usize {
        self.lip_mask.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn is_lip(&self, x: usize, y: usize) -> bool {
        self.lip_mask[y * self.roi.w + x]
    }
}

/// Mean colour vector over `(r, g, b, warped hue, cr/255)` with its
/// spread and acceptance radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ColourPrototype {
    pub mean: [f64; CHANNELS],
    pub spread: [f64; CHANNELS],
    pub threshold: f64,
}

impl ColourPrototype {
    pub fn distance(&self, v: &[f64; CHANNELS]) -> f64 {
        self.mean
            .iter()
            .zip(v)
            .map(|(m, x)| (x - m) * (x - m))
            .sum::<f64>()
            .sqrt()
    }
}

/// Seed pixels in frame coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub pixels: Vec<(usize, usize)>,
    /// The score distribution had no strict top decile (flat input).
    pub degenerate: bool,
}

#[inline]
pub fn colour_vector(p: Rgb) -> [f64; CHANNELS] {
    let (r, g, b) = chromaticity(p);
    let (_, _, cr) = to_ycbcr(p);
    [r, g, b, warp_hue(hue(p)), cr / 255.0]
}

/// Lower half of the face box, the mouth search window.
pub fn search_window(face_box: BoundingBox) -> BoundingBox {
    let top = face_box.h / 2;
    BoundingBox {
        x: face_box.x,
        y: face_box.y + top,
        w: face_box.w,
        h: face_box.h - top,
    }
}

fn check_face_box(frame: &Frame, face_box: BoundingBox) -> Result<()> {
    face_box.check_within(frame.width(), frame.height())?;
    if face_box.w < 4 || face_box.h < 4 {
        return Err(Error::Dimension(format!(
            "face box must be at least 4x4, got {}x{}",
            face_box.w, face_box.h
        )));
    }
    Ok(())
}

/// Marks the top decile of `cr - cb` in the search window and returns the
/// largest 4-connected group of marks.
pub fn seed_lips(frame: &Frame, face_box: BoundingBox) -> Result<Seed> {
    check_face_box(frame, face_box)?;
    let win = search_window(face_box);
    let mut scores = Vec::with_capacity(win.area());
    for y in win.y..win.bottom() {
        for x in win.x..win.right() {
            let (_, cb, cr) = to_ycbcr(frame.get(x, y));
            scores.push(cr - cb);
        }
    }
    let n = scores.len();
    let keep = ((n as f64 * SEED_FRACTION).floor() as usize).clamp(1, n);

    let mut sorted = scores.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    // strictly above the first score outside the top decile, so ties with a
    // flat background are never marked
    let mut degenerate = false;
    let mut marks: Vec<bool> = if keep < n {
        let cut = sorted[keep];
        scores.iter().map(|&s| s > cut).collect()
    } else {
        vec![true; n]
    };
    if !marks.iter().any(|&m| m) {
        degenerate = true;
        let cut = sorted[keep - 1];
        marks = scores.iter().map(|&s| s >= cut).collect();
    }

    let component = largest_component(&marks, win.w, win.h);
    let pixels = component
        .iter()
        .map(|&i| (win.x + i % win.w, win.y + i / win.w))
        .collect();
    Ok(Seed { pixels, degenerate })
}

pub fn build_prototype(frame: &Frame, seed: &[(usize, usize)]) -> Result<ColourPrototype> {
    if seed.is_empty() {
        return Err(Error::Dimension("prototype needs at least one seed pixel".into()));
    }
    let vectors: Vec<[f64; CHANNELS]> = seed.iter().map(|&(x, y)| colour_vector(frame.get(x, y))).collect();
    let n = vectors.len() as f64;
    let mut mean = [0.0; CHANNELS];
    for v in &vectors {
        for c in 0..CHANNELS {
            mean[c] += v[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut spread = [0.0; CHANNELS];
    for v in &vectors {
        for c in 0..CHANNELS {
            spread[c] += (v[c] - mean[c]).powi(2);
        }
    }
    spread.iter_mut().for_each(|s| *s = (*s / n).sqrt());

    let proto = ColourPrototype {
        mean,
        spread,
        threshold: 0.0,
    };
    let dists: Vec<f64> = vectors.iter().map(|v| proto.distance(v)).collect();
    let mean_d = dists.iter().sum::<f64>() / n;
    let std_d = (dists.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ColourPrototype {
        threshold: (mean_d + THRESHOLD_SIGMAS * std_d).max(THRESHOLD_FLOOR),
        ..proto
    })
}

/// Clusters the search window against the prototype, keeps the largest
/// component, fills its holes and boxes it.
pub fn grow_lips(frame: &Frame, face_box: BoundingBox, proto: &ColourPrototype) -> Result<LipRegion> {
    grow_with_seed(frame, face_box, proto, &[])
}

fn grow_with_seed(
    frame: &Frame,
    face_box: BoundingBox,
    proto: &ColourPrototype,
    seed: &[(usize, usize)],
) -> Result<LipRegion> {
    check_face_box(frame, face_box)?;
    let win = search_window(face_box);
    let mut marks = Vec::with_capacity(win.area());
    for y in win.y..win.bottom() {
        for x in win.x..win.right() {
            marks.push(proto.distance(&colour_vector(frame.get(x, y))) < proto.threshold);
        }
    }
    if !marks.iter().any(|&m| m) {
        // equidistant seed colours can sit exactly on the radius
        for &(x, y) in seed {
            if x >= win.x && x < win.right() && y >= win.y && y < win.bottom() {
                marks[(y - win.y) * win.w + (x - win.x)] = true;
            }
        }
    }
    if !marks.iter().any(|&m| m) {
        return Err(Error::Dimension("no pixel matched the lip colour prototype".into()));
    }

    let component = largest_component(&marks, win.w, win.h);
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &i in &component {
        let (x, y) = (i % win.w, i / win.w);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut mask = vec![false; bw * bh];
    for &i in &component {
        let (x, y) = (i % win.w - x0, i / win.w - y0);
        mask[y * bw + x] = true;
    }
    fill_holes(&mut mask, bw, bh);

    let roi = BoundingBox {
        x: win.x + x0,
        y: win.y + y0,
        w: bw,
        h: bh,
    };
    let coverage = component.len() as f64 / win.area() as f64;
    Ok(LipRegion {
        roi,
        lip_mask: mask,
        ellipse: inscribe_ellipse(roi),
        seed_pixel_count: seed.len(),
        low_confidence: coverage > LOW_CONFIDENCE_COVERAGE,
    })
}

/// Seed, prototype and growth in one call.
pub fn localize(frame: &Frame, face_box: BoundingBox) -> Result<LipRegion> {
    let seed = seed_lips(frame, face_box)?;
    let proto = build_prototype(frame, &seed.pixels)?;
    let mut region = grow_with_seed(frame, face_box, &proto, &seed.pixels)?;
    if seed.degenerate {
        region.low_confidence = true;
    }
    if region.low_confidence {
        log::warn!(
            "low-confidence lip localization: roi {}x{}+{}+{}",
            region.roi.w,
            region.roi.h,
            region.roi.x,
            region.roi.y
        );
    }
    Ok(region)
}

/// Indices of the largest 4-connected `true` component; ties go to the
/// component found first in raster order.
fn largest_component(marks: &[bool], w: usize, h: usize) -> Vec<usize> {
    let mut label = vec![false; marks.len()];
    let mut best: Vec<usize> = Vec::new();
    let mut current = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..marks.len() {
        if !marks[start] || label[start] {
            continue;
        }
        current.clear();
        label[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            current.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if marks[j] && !label[j] {
                    label[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if current.len() > best.len() {
            best = current.clone();
        }
    }
    best.sort_unstable();
    best
}

/// Sets every `false` cell not 4-connected to the border.
fn fill_holes(mask: &mut [bool], w: usize, h: usize) {
    let mut outside = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x + 1 == w || y + 1 == h) && !mask[y * w + x] {
                outside[y * w + x] = true;
                queue.push_back(y * w + x);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let neighbours = [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ];
        for j in neighbours.into_iter().flatten() {
            if !mask[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    for (m, o) in mask.iter_mut().zip(outside) {
        if !*m && !o {
            *m = true;
        }
    }
}

/// `frame_index,x,y,w,h` rows, one per frame.
pub fn read_roi_file(path: &Path) -> Result<Vec<(usize, BoundingBox)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (lineno == 0 && line.starts_with("frame_index")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::parse(path, format!("line {}: expected 5 fields", lineno + 1)));
        }
        let mut nums = [0usize; 5];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: bad integer {f:?}", lineno + 1)))?;
        }
        let rect = BoundingBox::new(nums[1], nums[2], nums[3], nums[4])
            .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        rows.push((nums[0], rect));
    }
    rows.sort_by_key(|r| r.0);
    Ok(rows)
}

pub fn format_roi_csv(rows: &[(usize, BoundingBox)]) -> String {
    let mut out = String::from("frame_index,x,y,w,h\n");
    for (i, b) in rows {
        out.push_str(&format!("{i},{},{},{},{}\n", b.x, b.y, b.w, b.h));
    }
    out
}

pub fn write_roi_file(path: &Path, rows: &[(usize, BoundingBox)]) -> Result<()> {
    fs::write(path, format_roi_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Per-frame boxes from an override file, checked against the frame count.
pub fn regions_from_roi_file(path: &Path, frames: &[Frame]) -> Result<Vec<LipRegion>> {
    let rows = read_roi_file(path)?;
    let mut boxes: Vec<Option<BoundingBox>> = vec![None; frames.len()];
    for (i, b) in rows {
        if i >= frames.len() {
            return Err(Error::parse(
                path,
                format!("frame_index {i} out of range ({} frames)", frames.len()),
            ));
        }
        b.check_within(frames[i].width(), frames[i].height())?;
        boxes[i] = Some(b);
    }
    boxes
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            b.map(LipRegion::from_box)
                .ok_or_else(|| Error::parse(path, format!("no box for frame {i}")))
        })
        .collect()
}
