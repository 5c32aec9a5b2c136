//! Raster types, colour conversions, Sobel filtering, bilinear resizing and
//! ellipse-mask geometry.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "frame must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Frame { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, colour: Rgb) -> Result<Self> {
        Frame::new(width, height, vec![colour; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Frame::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: Rgb) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox {
            x: 0,
            y: 0,
            w: self.width,
            h: self.height,
        }
    }

    /// Copy of the pixels under `rect`, which must lie inside the frame.
    pub fn crop(&self, rect: BoundingBox) -> Result<Frame> {
        rect.check_within(self.width, self.height)?;
        let mut pixels = Vec::with_capacity(rect.w * rect.h);
        for y in rect.y..rect.y + rect.h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + rect.x..row + rect.x + rect.w]);
        }
        Frame::new(rect.w, rect.h, pixels)
    }

    /// BT.601 luma of every pixel.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| luma(p)).collect(),
        }
    }

    /// Nearest-neighbour upscale by an integer factor (each pixel becomes a
    /// `factor x factor` block).
    pub fn upscale(&self, factor: usize) -> Frame {
        let factor = factor.max(1);
        let (w, h) = (self.width * factor, self.height * factor);
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                pixels.push(self.get(x / factor, y / factor));
            }
        }
        Frame {
            width: w,
            height: h,
            pixels,
        }
    }
}

/// Single-channel raster of real intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "image {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(GrayImage { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        GrayImage::new(width, height, values)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Axis-aligned pixel rectangle; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Dimension(format!("box must be at least 1x1, got {w}x{h}")));
        }
        Ok(BoundingBox { x, y, w, h })
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.right() > width || self.bottom() > height {
            return Err(Error::Dimension(format!(
                "box {}x{}+{}+{} does not fit in {width}x{height}",
                self.w, self.h, self.x, self.y
            )));
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) * (y1 - y0)
        }
    }

    /// Intersection over union.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn scaled(&self, factor: usize) -> BoundingBox {
        BoundingBox {
            x: self.x * factor,
            y: self.y * factor,
            w: self.w * factor,
            h: self.h * factor,
        }
    }
}

/// Largest axis-aligned ellipse inscribed in a box, rasterized over the box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipseMask {
    pub rect: BoundingBox,
    inside: Vec<bool>,
}

impl EllipseMask {
    /// Test at local coordinates relative to the box origin.
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.inside[y * self.rect.w + x]
    }

    pub fn mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

/// Half-pixel inset applied to both semi-axes so the corner pixels of a
/// 3x3 box fall outside.
const ELLIPSE_INSET: f64 = 0.25;

pub fn inscribe_ellipse(rect: BoundingBox) -> EllipseMask {
    let (w, h) = (rect.w, rect.h);
    let cx = w as f64 / 2.0;
    let cy = h as f64 / 2.0;
    let a = cx - ELLIPSE_INSET;
    let b = cy - ELLIPSE_INSET;
    let mut inside = Vec::with_capacity(w * h);
    for y in 0..h {
        let dy = (y as f64 + 0.5 - cy) / b;
        for x in 0..w {
            let dx = (x as f64 + 0.5 - cx) / a;
            inside.push(dx * dx + dy * dy <= 1.0);
        }
    }
    EllipseMask { rect, inside }
}

/// BT.601 luma.
#[inline]
pub fn luma(p: Rgb) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// BT.601 full-range YCbCr, chroma centred at 128.
#[inline]
pub fn to_ycbcr(p: Rgb) -> (f64, f64, f64) {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    (y, cb, cr)
}

/// Normalized chromaticities; black maps to (1/3, 1/3, 1/3).
#[inline]
pub fn chromaticity(p: Rgb) -> (f64, f64, f64) {
    let sum = p[0] as u32 + p[1] as u32 + p[2] as u32;
    if sum == 0 {
        return (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
    }
    let s = sum as f64;
    (p[0] as f64 / s, p[1] as f64 / s, p[2] as f64 / s)
}

/// HSV hue in `[0, 1)`; greys have hue 0.
pub fn hue(p: Rgb) -> f64 {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return 0.0;
    }
    let h = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = h / 6.0;
    if h >= 1.0 {
        0.0
    } else {
        h
    }
}

/// Hue rotated by half a turn so reds sit near 0.5 instead of straddling
/// the 0/1 seam.
#[inline]
pub fn warp_hue(h: f64) -> f64 {
    (h + 0.5).rem_euclid(1.0)
}

/// Every colour coordinate used by the pipeline for one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorCoords {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub yc: f64,
    pub cb: f64,
    pub cr: f64,
    pub h: f64,
    pub hw: f64,
    pub lab_a: f64,
    pub lab_b: f64,
    pub luv_u: f64,
    pub luv_v: f64,
}

impl ColorCoords {
    pub fn of(p: Rgb) -> Self {
        let (r, g, b) = chromaticity(p);
        let (yc, cb, cr) = to_ycbcr(p);
        let h = hue(p);
        let (_, lab_a, lab_b) = to_lab(p);
        let (_, luv_u, luv_v) = to_luv(p);
        ColorCoords {
            r,
            g,
            b,
            yc,
            cb,
            cr,
            h,
            hw: warp_hue(h),
            lab_a,
            lab_b,
            luv_u,
            luv_v,
        }
    }
}

// D65 reference white, Y normalized to 1.
const WHITE_X: f64 = 0.950_47;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.088_83;

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB (D65) to CIE XYZ with Y in `[0, 1]`.
pub fn to_xyz(p: Rgb) -> (f64, f64, f64) {
    let r = srgb_to_linear(p[0]);
    let g = srgb_to_linear(p[1]);
    let b = srgb_to_linear(p[2]);
    (
        0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b,
        0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b,
        0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b,
    )
}

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

/// CIE 1976 L*a*b*.
pub fn to_lab(p: Rgb) -> (f64, f64, f64) {
    let (x, y, z) = to_xyz(p);
    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// CIE 1976 L*u*v*.
pub fn to_luv(p: Rgb) -> (f64, f64, f64) {
    let (x, y, z) = to_xyz(p);
    let yr = y / WHITE_Y;
    let l = if yr > LAB_EPSILON {
        116.0 * yr.cbrt() - 16.0
    } else {
        LAB_KAPPA * yr
    };
    let denom = x + 15.0 * y + 3.0 * z;
    if denom == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let white_denom = WHITE_X + 15.0 * WHITE_Y + 3.0 * WHITE_Z;
    let u_ref = 4.0 * WHITE_X / white_denom;
    let v_ref = 9.0 * WHITE_Y / white_denom;
    let u_prime = 4.0 * x / denom;
    let v_prime = 9.0 * y / denom;
    (l, 13.0 * l * (u_prime - u_ref), 13.0 * l * (v_prime - v_ref))
}

/// CIELAB a* and CIELUV u* of one pixel, the two coordinates the teeth
/// detector thresholds.
pub fn to_lab_luv(p: Rgb) -> (f64, f64) {
    let (x, y, z) = to_xyz(p);
    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let lab_a = 500.0 * (fx - fy);

    let l = 116.0 * fy - 16.0;
    let denom = x + 15.0 * y + 3.0 * z;
    let luv_u = if denom == 0.0 {
        0.0
    } else {
        let white_denom = WHITE_X + 15.0 * WHITE_Y + 3.0 * WHITE_Z;
        13.0 * l * (4.0 * x / denom - 4.0 * WHITE_X / white_denom)
    };
    (lab_a, luv_u)
}

pub const SOBEL_V: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
pub const SOBEL_H: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Sum of absolute Sobel responses over the interior pixels:
/// `(vertical-edge sum, horizontal-edge sum)`.
pub fn sobel_sums(img: &GrayImage) -> Result<(f64, f64)> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::Dimension(format!("sobel needs at least 3x3, got {w}x{h}")));
    }
    let v = &img.values;
    let mut sum_v = 0.0;
    let mut sum_h = 0.0;
    for y in 1..h - 1 {
        let up = &v[(y - 1) * w..y * w];
        let mid = &v[y * w..(y + 1) * w];
        let down = &v[(y + 1) * w..(y + 2) * w];
        for x in 1..w - 1 {
            let gx = (up[x + 1] - up[x - 1]) + 2.0 * (mid[x + 1] - mid[x - 1]) + (down[x + 1] - down[x - 1]);
            let gy = (down[x - 1] + 2.0 * down[x] + down[x + 1]) - (up[x - 1] + 2.0 * up[x] + up[x + 1]);
            sum_v += gx.abs();
            sum_h += gy.abs();
        }
    }
    Ok((sum_v, sum_h))
}

/// Corner-aligned bilinear resize: the source corners map onto the target
/// corners.
pub fn resize_bilinear(img: &GrayImage, tw: usize, th: usize) -> Result<GrayImage> {
    if tw == 0 || th == 0 {
        return Err(Error::Dimension(format!(
            "resize target must be at least 1x1, got {tw}x{th}"
        )));
    }
    if tw == img.width && th == img.height {
        return Ok(img.clone());
    }
    let sx = axis_scale(img.width, tw);
    let sy = axis_scale(img.height, th);
    let mut values = Vec::with_capacity(tw * th);
    for ty in 0..th {
        let fy = ty as f64 * sy;
        let y0 = (fy.floor() as usize).min(img.height - 1);
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f64;
        for tx in 0..tw {
            let fx = tx as f64 * sx;
            let x0 = (fx.floor() as usize).min(img.width - 1);
            let x1 = (x0 + 1).min(img.width - 1);
            let wx = fx - x0 as f64;
            let top = img.get(x0, y0) * (1.0 - wx) + img.get(x1, y0) * wx;
            let bottom = img.get(x0, y1) * (1.0 - wx) + img.get(x1, y1) * wx;
            values.push(top * (1.0 - wy) + bottom * wy);
        }
    }
    GrayImage::new(tw, th, values)
}

fn axis_scale(src: usize, dst: usize) -> f64 {
    if dst <= 1 || src <= 1 {
        0.0
    } else {
        (src - 1) as f64 / (dst - 1) as f64
    }
}
