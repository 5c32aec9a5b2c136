// Haar sub-bands, mutual information and the quality index on a pair of
// small images, plus the stripe-orientation wavelet ratio.

use lipread::features::ratio_wavelet;
use lipread::transforms::{count_feature_points, haar_dwt, haar_idwt, mutual_information, quality_index};
use lipread::{Frame, GrayImage};

pub fn run_example() -> lipread::Result<(f64, f64)> {
    let a = GrayImage::from_fn(16, 16, |x, y| ((x * 7 + y * 3) % 11) as f64 * 20.0)?;
    let b = GrayImage::from_fn(16, 16, |x, y| ((x * 7 + y * 3 + 1) % 11) as f64 * 20.0)?;

    let q = haar_dwt(&a);
    let back = haar_idwt(&q)?;
    println!("round trip exact: {}", back == a);
    for (name, band) in ["LL", "HL", "LH", "HH"].iter().zip(q.bands()) {
        println!("{name}: {} feature points", count_feature_points(band));
    }

    let mi = mutual_information(&a, &b)?;
    let qi = quality_index(&a, &b)?;
    println!(
        "MI(a, b) = {mi:.4} bits, MI(a, a) = {:.4} bits",
        mutual_information(&a, &a)?
    );
    println!("Q(a, b) = {qi:.4}, Q(a, a) = {:.4}", quality_index(&a, &a)?);

    let stripes = |vertical: bool| {
        Frame::from_fn(18, 18, |x, y| {
            let on = if vertical { (x / 3) % 2 == 0 } else { (y / 3) % 2 == 0 };
            if on {
                [220, 220, 220]
            } else {
                [30, 30, 30]
            }
        })
    };
    println!("ratio_wavelet vertical stripes: {:.3}", ratio_wavelet(&stripes(true)?));
    println!(
        "ratio_wavelet horizontal stripes: {:.3}",
        ratio_wavelet(&stripes(false)?)
    );
    Ok((mi, qi))
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
