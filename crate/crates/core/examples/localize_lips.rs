// Localize the mouth in synthetic frames and compare against the rendered
// ground-truth boxes.

use lipread::harness::{generate_in_memory, SynthConfig};
use lipread::localize;

pub fn run_example() -> lipread::Result<f64> {
    let cfg = SynthConfig {
        vocabulary_size: 2,
        speakers: 1,
        repetitions: 1,
        noise_sigma: 8.0,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg)?;
    let utt = &data.utterances[0];
    let mut total = 0.0;
    println!("frame  detected              truth                 iou");
    for (i, (frame, truth)) in utt.frames.iter().zip(&utt.truth).enumerate() {
        let region = localize(frame, frame.bounds())?;
        let iou = region.roi.iou(truth);
        total += iou;
        let r = region.roi;
        println!(
            "{i:>5}  ({:>3},{:>3},{:>3},{:>3})     ({:>3},{:>3},{:>3},{:>3})     {iou:.3}{}",
            r.x,
            r.y,
            r.w,
            r.h,
            truth.x,
            truth.y,
            truth.w,
            truth.h,
            if region.low_confidence { "  low confidence" } else { "" }
        );
    }
    let mean = total / utt.frames.len() as f64;
    println!("mean IoU {mean:.3}");
    Ok(mean)
}

#[allow(dead_code)]
fn main() -> lipread::Result<()> {
    run_example().map(|_| ())
}
