// DTW between short sequences and a KNN vote over a handful of hand-made
// signatures.

use lipread::recognizer::{dtw, dtw_cost, DistanceConfig};
use lipread::{classify, TrainingIndex, WordSignature};

fn ramp(label: &str, n: usize, up: bool) -> WordSignature {
    let rows = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            [if up { t } else { 1.0 - t }; 8]
        })
        .collect();
    WordSignature::new(rows).expect("rows are non-empty").with_label(label)
}

pub fn run_example() -> lipread::Result<String> {
    let a = [0.0, 1.0, 2.0];
    let b = [0.0, 2.0];
    println!("raw DTW cost {}, normalized {:.4}", dtw_cost(&a, &b)?, dtw(&a, &b)?);

    let train = vec![
        ramp("open", 10, true),
        ramp("open", 14, true),
        ramp("close", 9, false),
        ramp("close", 13, false),
    ];
    let index = TrainingIndex::new(train, DistanceConfig::default(), 3)?;
    let probe = ramp("?", 20, true);
    let p = classify(&index, &probe)?;
    println!("predicted {} at {:.4}", p.label, p.distance());
    for n in &p.neighbours {
        println!("  {:<6} {:.4}", n.label, n.distance);
    }
    Ok(p.label)
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
