//! One-level Haar DWT, histogram mutual information, the universal image
//! quality index, and the sub-band helpers built on them.

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const MI_BINS: usize = 64;
const QUALITY_EPS: f64 = 1e-12;

/// The four sub-bands of a one-level Haar decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletQuad {
    pub ll: GrayImage,
    pub hl: GrayImage,
    pub lh: GrayImage,
    pub hh: GrayImage,
}

impl WaveletQuad {
    pub fn bands(&self) -> [&GrayImage; 4] {
        [&self.ll, &self.hl, &self.lh, &self.hh]
    }
}

/// Orthonormal one-level Haar transform. Odd dimensions are padded by
/// replicating the last row/column.
pub fn haar_dwt(img: &GrayImage) -> WaveletQuad {
    let (w, h) = (img.width(), img.height());
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));
    let at = |x: usize, y: usize| img.get(x.min(w - 1), y.min(h - 1));
    let n = hw * hh;
    let (mut ll, mut hl, mut lh, mut d) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for by in 0..hh {
        for bx in 0..hw {
            let a = at(2 * bx, 2 * by);
            let b = at(2 * bx + 1, 2 * by);
            let c = at(2 * bx, 2 * by + 1);
            let e = at(2 * bx + 1, 2 * by + 1);
            ll.push((a + b + c + e) / 2.0);
            hl.push(((a + c) - (b + e)) / 2.0);
            lh.push(((a + b) - (c + e)) / 2.0);
            d.push((a - b - c + e) / 2.0);
        }
    }
    let band = |v| GrayImage::new(hw, hh, v).expect("sub-band dims are non-zero");
    WaveletQuad {
        ll: band(ll),
        hl: band(hl),
        lh: band(lh),
        hh: band(d),
    }
}

/// Inverse of [`haar_dwt`]. The output has even dimensions; for an input
/// with odd width or height, crop to recover the original.
pub fn haar_idwt(q: &WaveletQuad) -> Result<GrayImage> {
    let (hw, hh) = (q.ll.width(), q.ll.height());
    for b in [&q.hl, &q.lh, &q.hh] {
        check_same_dims(&q.ll, b)?;
    }
    let w = 2 * hw;
    let mut out = vec![0.0; w * 2 * hh];
    for by in 0..hh {
        for bx in 0..hw {
            let (s, v, u, d) = (q.ll.get(bx, by), q.hl.get(bx, by), q.lh.get(bx, by), q.hh.get(bx, by));
            let (x, y) = (2 * bx, 2 * by);
            out[y * w + x] = (s + v + u + d) / 2.0;
            out[y * w + x + 1] = (s - v + u - d) / 2.0;
            out[(y + 1) * w + x] = (s + v - u - d) / 2.0;
            out[(y + 1) * w + x + 1] = (s - v - u + d) / 2.0;
        }
    }
    GrayImage::new(w, 2 * hh, out)
}

fn check_same_dims(x: &GrayImage, y: &GrayImage) -> Result<()> {
    if !x.same_dims(y) {
        return Err(Error::Dimension(format!(
            "images differ in size: {}x{} vs {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )));
    }
    Ok(())
}

/// 64x64 joint count histogram of two equally sized images.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    bins: Vec<u32>,
    pub n: usize,
}

impl JointHistogram {
    /// Both images share one linear binning over the pair's common min/max.
    pub fn build(x: &GrayImage, y: &GrayImage) -> Result<Self> {
        check_same_dims(x, y)?;
        let (lo, hi) = x
            .values()
            .iter()
            .chain(y.values())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let mut bins = vec![0u32; MI_BINS * MI_BINS];
        for (&a, &b) in x.values().iter().zip(y.values()) {
            bins[quantize(a, lo, hi) * MI_BINS + quantize(b, lo, hi)] += 1;
        }
        Ok(JointHistogram { bins, n: x.len() })
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.bins[i * MI_BINS + j]
    }

    pub fn row_sums(&self) -> Vec<u32> {
        self.bins.chunks(MI_BINS).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u32> {
        let mut cols = vec![0u32; MI_BINS];
        for row in self.bins.chunks(MI_BINS) {
            for (c, &v) in cols.iter_mut().zip(row) {
                *c += v;
            }
        }
        cols
    }
}

/// Bin index in `0..MI_BINS` over `[lo, hi]`; a degenerate range is bin 0.
#[inline]
pub fn quantize(v: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = (v - lo) / (hi - lo);
    ((t * MI_BINS as f64) as usize).min(MI_BINS - 1)
}

/// Histogram mutual information in bits.
pub fn mutual_information(x: &GrayImage, y: &GrayImage) -> Result<f64> {
    let hist = JointHistogram::build(x, y)?;
    let n = hist.n as f64;
    let px = hist.row_sums();
    let py = hist.col_sums();
    let mut mi = 0.0;
    for (i, &cx) in px.iter().enumerate() {
        if cx == 0 {
            continue;
        }
        for (j, &cy) in py.iter().enumerate() {
            let c = hist.count(i, j);
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (c as f64 * n / (cx as f64 * cy as f64)).log2();
        }
    }
    Ok(mi.max(0.0))
}

/// Sample statistics entering the quality index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityStats {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

impl QualityStats {
    /// Unbiased (N-1) variances and covariance.
    pub fn of(x: &GrayImage, y: &GrayImage) -> Result<Self> {
        check_same_dims(x, y)?;
        if x.len() < 2 {
            return Err(Error::Dimension("quality index needs at least 2 samples".into()));
        }
        let (sxx, syy, sxy, mean_x, mean_y) = centred_sums(x.values(), y.values());
        let dof = (x.len() - 1) as f64;
        Ok(QualityStats {
            mean_x,
            mean_y,
            var_x: sxx / dof,
            var_y: syy / dof,
            cov: sxy / dof,
        })
    }
}

fn centred_sums(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    (sxx, syy, sxy, mx, my)
}

/// Universal image quality index,
/// `4 cov mean_x mean_y / ((var_x + var_y)(mean_x^2 + mean_y^2))`, in `[-1, 1]`.
///
/// When the denominator vanishes the index is 1 for identical inputs and 0
/// otherwise.
pub fn quality_index(x: &GrayImage, y: &GrayImage) -> Result<f64> {
    check_same_dims(x, y)?;
    if x.len() < 2 {
        return Err(Error::Dimension("quality index needs at least 2 samples".into()));
    }
    let (sxx, syy, sxy, mx, my) = centred_sums(x.values(), y.values());
    let dof = (x.len() - 1) as f64;
    let mean_sq = mx * mx + my * my;
    if (sxx + syy) / dof * mean_sq < QUALITY_EPS {
        return Ok(if x.values() == y.values() { 1.0 } else { 0.0 });
    }
    // the (N-1) normalizers cancel between numerator and denominator
    let q = 4.0 * sxy * mx * my / ((sxx + syy) * mean_sq);
    Ok(q.clamp(-1.0, 1.0))
}

/// Mean of a pairwise measure over the four matching sub-bands.
pub fn subband_average<F>(f: F, cur: &WaveletQuad, prev: &WaveletQuad) -> Result<f64>
where
    F: Fn(&GrayImage, &GrayImage) -> Result<f64>,
{
    let mut total = 0.0;
    for (a, b) in cur.bands().into_iter().zip(prev.bands()) {
        total += f(a, b)?;
    }
    Ok(total / 4.0)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Coefficients strictly outside `median ± σ` of the band (sample σ).
pub fn count_feature_points(band: &GrayImage) -> usize {
    let v = band.values();
    if v.is_empty() {
        return 0;
    }
    if v.len() < 2 {
        return 0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sigma = (v.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let med = median(v);
    v.iter().filter(|&&c| c > med + sigma || c < med - sigma).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, v: &[f64]) -> GrayImage {
        GrayImage::new(w, h, v.to_vec()).unwrap()
    }

    #[test]
    fn haar_block_formula() {
        let q = haar_dwt(&img(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(q.ll.values(), &[5.0]);
        assert_eq!(q.hl.values(), &[-1.0]);
        assert_eq!(q.lh.values(), &[-2.0]);
        assert_eq!(q.hh.values(), &[0.0]);

        let q = haar_dwt(&GrayImage::filled(6, 4, 3.0).unwrap());
        assert!(q.ll.values().iter().all(|&v| v == 6.0));
        for b in [&q.hl, &q.lh, &q.hh] {
            assert!(b.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn haar_inverse_restores_blocks() {
        let x = img(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(haar_idwt(&haar_dwt(&x)).unwrap(), x);
    }

    #[test]
    fn haar_odd_dims_pad_by_replication() {
        let q = haar_dwt(&img(3, 1, &[1.0, 2.0, 3.0]));
        assert_eq!((q.ll.width(), q.ll.height()), (2, 1));
        // second block is [[3,3],[3,3]] after padding
        assert_eq!(q.ll.values()[1], 6.0);
        assert_eq!(q.hl.values()[1], 0.0);
    }

    #[test]
    fn mutual_information_reference_values() {
        let checker = GrayImage::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 100.0 }).unwrap();
        let mi = mutual_information(&checker, &checker).unwrap();
        assert!((mi - 1.0).abs() < 1e-12);

        let flat = GrayImage::filled(8, 8, 5.0).unwrap();
        assert_eq!(mutual_information(&flat, &checker).unwrap(), 0.0);
        assert!(mutual_information(&flat, &img(2, 2, &[0.0; 4])).is_err());
    }

    #[test]
    fn quality_reference_values() {
        let x = GrayImage::from_fn(5, 5, |x, y| (x * x + 3 * y) as f64).unwrap();
        assert!((quality_index(&x, &x).unwrap() - 1.0).abs() < 1e-12);

        let a = img(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let b = img(4, 1, &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(quality_index(&a, &b).unwrap(), -1.0);

        let c = GrayImage::filled(4, 1, 0.0).unwrap();
        assert_eq!(quality_index(&c, &c).unwrap(), 1.0);
        assert_eq!(quality_index(&c, &GrayImage::filled(4, 1, 1e-9).unwrap()).unwrap(), 0.0);
        assert!(quality_index(&img(1, 1, &[1.0]), &img(1, 1, &[1.0])).is_err());
    }

    #[test]
    fn quality_stats_definitions() {
        let a = img(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let s = QualityStats::of(&a, &a).unwrap();
        assert_eq!(s.mean_x, 2.5);
        assert!((s.var_x - 5.0 / 3.0).abs() < 1e-12);
        assert!((s.cov - s.var_x).abs() < 1e-12);
    }

    #[test]
    fn subband_average_is_a_plain_mean() {
        let x = GrayImage::from_fn(8, 8, |x, y| ((x * 7 + y * 3) % 11) as f64).unwrap();
        let q = haar_dwt(&x);
        assert!((subband_average(quality_index, &q, &q).unwrap() - 1.0).abs() < 1e-12);

        let vals = [0.2, 0.4, 0.6, 0.8];
        let counter = std::cell::Cell::new(0);
        let f = |_: &GrayImage, _: &GrayImage| {
            let i = counter.get();
            counter.set(i + 1);
            Ok(vals[i])
        };
        assert!((subband_average(f, &q, &q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn feature_point_examples() {
        assert_eq!(count_feature_points(&GrayImage::filled(4, 4, 2.0).unwrap()), 0);
        assert_eq!(
            count_feature_points(&img(8, 1, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0])),
            1
        );
        // sample sigma is exactly 5 here, so the +-5 values sit on the boundary
        assert_eq!(count_feature_points(&img(5, 1, &[-5.0, -5.0, 0.0, 5.0, 5.0])), 0);
        assert_eq!(count_feature_points(&img(5, 1, &[-6.0, -5.0, 0.0, 5.0, 6.0])), 2);
        assert_eq!(count_feature_points(&img(1, 1, &[3.0])), 0);
    }

    proptest! {
        #[test]
        fn mi_symmetric_non_negative(vals in proptest::collection::vec(0.0f64..255.0, 72)) {
            let x = img(6, 6, &vals[..36]);
            let y = img(6, 6, &vals[36..]);
            let a = mutual_information(&x, &y).unwrap();
            let b = mutual_information(&y, &x).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn quality_symmetric_and_bounded(vals in proptest::collection::vec(-50.0f64..255.0, 50)) {
            let x = img(5, 5, &vals[..25]);
            let y = img(5, 5, &vals[25..]);
            let a = quality_index(&x, &y).unwrap();
            let b = quality_index(&y, &x).unwrap();
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn feature_points_shift_invariant(vals in proptest::collection::vec(-20i32..20, 1..40), shift in -100i32..100) {
            let v: Vec<f64> = vals.iter().map(|&x| x as f64).collect();
            let s: Vec<f64> = vals.iter().map(|&x| (x + shift) as f64).collect();
            let a = count_feature_points(&img(v.len(), 1, &v));
            let b = count_feature_points(&img(s.len(), 1, &s));
            prop_assert_eq!(a, b);
        }
    }
}
