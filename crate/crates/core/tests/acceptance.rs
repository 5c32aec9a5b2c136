//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! summary is always printed; exits non-zero if any check fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lipread::features::{normalize_columns, raw_features, NUM_SIGNALS};
use lipread::harness::{
    evaluate_speaker_dependent, evaluate_speaker_independent, generate_in_memory, signatures_from_synth,
    PipelineConfig, SynthConfig,
};
use lipread::recognizer::{dtw, dtw_cost};
use lipread::transforms::{haar_dwt, haar_idwt, mutual_information, quality_index, MI_BINS};
use lipread::{extract_signature, localize, Frame, GrayImage, LipRegion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..255.0)).unwrap()
}

// ---------------------------------------------------------------- 1

fn oracle_bin(v: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        0
    } else {
        (((v - lo) / (hi - lo)) * MI_BINS as f64)
            .floor()
            .min((MI_BINS - 1) as f64) as usize
    }
}

fn oracle_mi(x: &GrayImage, y: &GrayImage) -> f64 {
    let all: Vec<f64> = x.values().iter().chain(y.values()).copied().collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bx: Vec<usize> = x.values().iter().map(|&v| oracle_bin(v, lo, hi)).collect();
    let by: Vec<usize> = y.values().iter().map(|&v| oracle_bin(v, lo, hi)).collect();
    let n = bx.len() as f64;
    let mut mi = 0.0;
    for i in 0..MI_BINS {
        for j in 0..MI_BINS {
            let (mut cxy, mut cx, mut cy) = (0usize, 0usize, 0usize);
            for k in 0..bx.len() {
                cx += (bx[k] == i) as usize;
                cy += (by[k] == j) as usize;
                cxy += (bx[k] == i && by[k] == j) as usize;
            }
            if cxy > 0 {
                let (pxy, px, py) = (cxy as f64 / n, cx as f64 / n, cy as f64 / n);
                mi += pxy * (pxy / (px * py)).log2();
            }
        }
    }
    mi
}

fn entropy(x: &GrayImage) -> f64 {
    let v = x.values();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = [0usize; MI_BINS];
    for &a in v {
        counts[oracle_bin(a, lo, hi)] += 1;
    }
    let n = v.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| -(c as f64 / n) * (c as f64 / n).log2())
        .sum()
}

fn mutual_information_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst, mut worst_self) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let x = random_image(&mut rng, 10, 10);
        // mix in correlated pairs so MI is not always near its floor
        let y = if i % 2 == 0 {
            random_image(&mut rng, 10, 10)
        } else {
            GrayImage::from_fn(10, 10, |a, b| x.get(a, b) * 0.7 + rng.random_range(0.0..60.0)).unwrap()
        };
        let mi = mutual_information(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((mi - oracle_mi(&x, &y)).abs());
        let self_mi = mutual_information(&x, &x).map_err(|e| e.to_string())?;
        worst_self = worst_self.max((self_mi - entropy(&x)).abs());
    }
    let t = start.elapsed();
    ensure(worst <= 1e-9, format!("max |MI - oracle| = {worst:e}"))?;
    ensure(worst_self <= 1e-9, format!("max |M(x,x) - H(x)| = {worst_self:e}"))?;
    ensure(t < Duration::from_secs(5), format!("took {}", secs(t)))?;
    Ok(format!(
        "200 pairs, max err {worst:.1e}, self-MI err {worst_self:.1e}, {}",
        secs(t)
    ))
}

// ---------------------------------------------------------------- 2

fn direct_quality(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0);
    let vy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0);
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    4.0 * cov * mx * my / ((vx + vy) * (mx * mx + my * my))
}

fn quality_index_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let (w, h) = (rng.random_range(2..12), rng.random_range(2..12));
        let x = random_image(&mut rng, w, h);
        let y = match i % 3 {
            0 => random_image(&mut rng, w, h),
            1 => GrayImage::from_fn(w, h, |a, b| 255.0 - x.get(a, b) + rng.random_range(0.0..20.0)).unwrap(),
            _ => GrayImage::from_fn(w, h, |a, b| 0.5 * x.get(a, b) + 30.0).unwrap(),
        };
        let q = quality_index(&x, &y).map_err(|e| e.to_string())?;
        ensure(q.abs() <= 1.0, format!("|Q| = {} > 1", q.abs()))?;
        worst = worst.max((q - direct_quality(x.values(), y.values())).abs());
        let qs = quality_index(&x, &x).map_err(|e| e.to_string())?;
        ensure((qs - 1.0).abs() <= 1e-12, format!("Q(x,x) = {qs}"))?;
    }
    ensure(worst <= 1e-9, format!("max |Q - direct| = {worst:e}"))?;
    let a = GrayImage::new(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = GrayImage::new(4, 1, vec![4.0, 3.0, 2.0, 1.0]).unwrap();
    let anti = quality_index(&a, &b).map_err(|e| e.to_string())?;
    ensure(anti == -1.0, format!("anti-correlated Q = {anti}"))?;
    Ok(format!(
        "200 pairs, max err {worst:.1e}, Q(x,x)=1, anti-correlated Q=-1"
    ))
}

// ---------------------------------------------------------------- 3

fn haar_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_energy = 0.0f64;
    let mut worst_real = 0.0f64;
    for i in 0..100 {
        let (w, h) = (2 * rng.random_range(1..17), 2 * rng.random_range(1..17));
        // pixel-valued images reconstruct bit for bit; real-valued ones to rounding
        let x = if i % 2 == 0 {
            GrayImage::from_fn(w, h, |_, _| rng.random_range(0..256) as f64).unwrap()
        } else {
            random_image(&mut rng, w, h)
        };
        let q = haar_dwt(&x);
        let back = haar_idwt(&q).map_err(|e| e.to_string())?;
        ensure(back.width() == w && back.height() == h, "reconstruction changed size")?;
        let err = x
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if i % 2 == 0 {
            ensure(
                err == 0.0,
                format!("integer image {w}x{h} reconstructs with error {err:e}"),
            )?;
        } else {
            worst_real = worst_real.max(err / 255.0);
        }
        let e_in: f64 = x.values().iter().map(|v| v * v).sum();
        let e_out: f64 = q.bands().iter().flat_map(|b| b.values()).map(|v| v * v).sum();
        worst_energy = worst_energy.max((e_in - e_out).abs() / e_in.max(1e-300));
    }
    ensure(
        worst_real <= 1e-12,
        format!("real-valued reconstruction error {worst_real:e}"),
    )?;
    ensure(worst_energy <= 1e-6, format!("energy relative error {worst_energy:e}"))?;
    Ok(format!(
        "100 images, exact reconstruction, energy rel err {worst_energy:.1e}"
    ))
}

// ---------------------------------------------------------------- 4

fn exhaustive_dtw(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

fn dtw_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seq = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let n = rng.random_range(1..=6);
        (0..n).map(|_| rng.random_range(0..3) as f64).collect()
    };
    for _ in 0..500 {
        let (a, b) = (seq(&mut rng), seq(&mut rng));
        let got = dtw_cost(&a, &b).map_err(|e| e.to_string())?;
        let want = exhaustive_dtw(&a, &b);
        ensure(
            got == want,
            format!("dtw_cost({a:?}, {b:?}) = {got}, exhaustive {want}"),
        )?;
    }
    let raw = dtw_cost(&[0.0, 1.0, 2.0], &[0.0, 2.0]).map_err(|e| e.to_string())?;
    let norm = dtw(&[0.0, 1.0, 2.0], &[0.0, 2.0]).map_err(|e| e.to_string())?;
    ensure(raw == 1.0, format!("worked pair raw cost {raw}"))?;
    ensure((norm - 0.2).abs() < 1e-15, format!("worked pair normalized {norm}"))?;
    Ok("500 pairs equal the exhaustive minimum; [0,1,2] vs [0,2] costs 1".into())
}

// ---------------------------------------------------------------- 5

fn regions_for(frames: &[Frame]) -> lipread::Result<Vec<LipRegion>> {
    frames.iter().map(|f| localize(f, f.bounds())).collect()
}

fn signature_contract() -> Check {
    let data = generate_in_memory(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let mut constant_columns = 0;
    for u in &data.utterances {
        let regions = regions_for(&u.frames).map_err(|e| e.to_string())?;
        let sig = extract_signature(&u.frames, &regions).map_err(|e| e.to_string())?;
        ensure(
            sig.n() == u.frames.len(),
            format!("{}: {} rows for {} frames", u.dir_name(), sig.n(), u.frames.len()),
        )?;
        ensure(
            sig.rows().iter().flatten().all(|v| (0.0..=1.0).contains(v)),
            format!("{}: value outside [0,1]", u.dir_name()),
        )?;
        let raw: Vec<[f64; NUM_SIGNALS]> = raw_features(&u.frames, &regions)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|f| f.to_array())
            .collect();
        for s in 0..NUM_SIGNALS {
            if raw.iter().all(|r| r[s] == raw[0][s]) {
                constant_columns += 1;
                ensure(
                    sig.column(s).iter().all(|&v| v == 0.5),
                    format!("{}: constant column {s} not 0.5", u.dir_name()),
                )?;
            }
        }
    }
    let forced = normalize_columns(&[[3.0; NUM_SIGNALS], [3.0; NUM_SIGNALS]]);
    ensure(
        forced.iter().flatten().all(|&v| v == 0.5),
        "constant matrix not mapped to 0.5",
    )?;

    let mut worst = 0.0f64;
    let sampled: Vec<_> = data.utterances.iter().step_by(10).collect();
    for u in &sampled {
        let a = extract_signature(&u.frames, &regions_for(&u.frames).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let big: Vec<Frame> = u.frames.iter().map(|f| f.upscale(2)).collect();
        let b = extract_signature(&big, &regions_for(&big).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for s in 0..2 {
            for (x, y) in a.column(s).iter().zip(b.column(s)) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure(worst <= 1e-6, format!("H/W change under 2x upscaling by {worst:e}"))?;
    Ok(format!(
        "{} utterances n x 8 in [0,1], constant columns at 0.5 ({constant_columns} in data plus a forced case), 2x upscale H/W err {worst:.1e} over {} words",
        data.utterances.len(),
        sampled.len()
    ))
}

// ---------------------------------------------------------------- 6

fn localization_iou() -> Check {
    let cfg = SynthConfig {
        noise_sigma: 8.0,
        vocabulary_size: 10,
        speakers: 3,
        repetitions: 1,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg).map_err(|e| e.to_string())?;
    let pairs: Vec<(&Frame, _)> = data
        .utterances
        .iter()
        .flat_map(|u| u.frames.iter().zip(&u.truth))
        .step_by(7)
        .take(100)
        .collect();
    ensure(pairs.len() == 100, "fewer than 100 frames rendered")?;
    let start = Instant::now();
    let mut total = 0.0;
    for (frame, truth) in &pairs {
        total += localize(frame, frame.bounds())
            .map_err(|e| e.to_string())?
            .roi
            .iou(truth);
    }
    let t = start.elapsed();
    let mean = total / pairs.len() as f64;
    ensure(mean >= 0.5, format!("mean IoU {mean:.3}"))?;
    ensure(t < Duration::from_secs(10), format!("took {}", secs(t)))?;
    Ok(format!("mean IoU {mean:.3} over 100 frames at noise 8, {}", secs(t)))
}

// ---------------------------------------------------------------- 7

fn end_to_end() -> Check {
    let start = Instant::now();
    let pc = PipelineConfig::default();
    let data = generate_in_memory(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let sigs = signatures_from_synth(&data, false).map_err(|e| e.to_string())?;
    let sd = evaluate_speaker_dependent(&sigs, &pc).map_err(|e| e.to_string())?;
    let si = evaluate_speaker_independent(&sigs, &pc).map_err(|e| e.to_string())?;
    let t_default = start.elapsed();

    let vsp_cfg = SynthConfig {
        speakers: 4,
        vsp_speakers: vec![3],
        ..SynthConfig::default()
    };
    let vsp_data = generate_in_memory(&vsp_cfg).map_err(|e| e.to_string())?;
    let vsp_sigs = signatures_from_synth(&vsp_data, false).map_err(|e| e.to_string())?;
    let vsp = evaluate_speaker_dependent(&vsp_sigs, &pc).map_err(|e| e.to_string())?;
    let t = start.elapsed();

    ensure(sd.overall >= 0.90, format!("speaker-dependent {:.4}", sd.overall))?;
    ensure(
        sd.overall > si.overall,
        format!("SD {:.4} not above SI {:.4}", sd.overall, si.overall),
    )?;
    let vsp_id = vsp_cfg.subject_id(3);
    let vsp_acc = vsp.subject_accuracy(&vsp_id).ok_or("VSP subject missing from report")?;
    let others = vsp
        .per_subject
        .iter()
        .filter(|s| s.subject != vsp_id)
        .map(|s| s.accuracy)
        .fold(f64::INFINITY, f64::min);
    ensure(
        vsp_acc < others,
        format!("VSP {vsp_acc:.3} not below lowest other speaker {others:.3}"),
    )?;
    ensure(t < Duration::from_secs(120), format!("took {}", secs(t)))?;
    Ok(format!(
        "SD {:.2}% > SI {:.2}%; VSP speaker {:.2}% vs others >= {:.2}%; default run {}, total {}",
        sd.overall * 100.0,
        si.overall * 100.0,
        vsp_acc * 100.0,
        others * 100.0,
        secs(t_default),
        secs(t)
    ))
}

// ---------------------------------------------------------------- 8

fn performance_budget() -> Check {
    let cfg = SynthConfig {
        vocabulary_size: 1,
        speakers: 1,
        repetitions: 1,
        frames_min: 100,
        frames_max: 100,
        width: 320,
        height: 240,
        ..SynthConfig::default()
    };
    let data = generate_in_memory(&cfg).map_err(|e| e.to_string())?;
    let frames = &data.utterances[0].frames;
    ensure(
        frames.len() == 100 && frames[0].width() == 320,
        "unexpected render size",
    )?;
    let start = Instant::now();
    let regions = regions_for(frames).map_err(|e| e.to_string())?;
    let sig = extract_signature(frames, &regions).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    ensure(sig.n() == 100, "signature length")?;
    let per_frame = t.as_secs_f64() * 1000.0 / 100.0;
    ensure(per_frame < 20.0, format!("{per_frame:.2} ms per frame"))?;
    ensure(t < Duration::from_secs(2), format!("100-frame word took {}", secs(t)))?;
    Ok(format!(
        "{per_frame:.2} ms per 320x240 frame, 100-frame word in {}",
        secs(t)
    ))
}

// ---------------------------------------------------------------- 9

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs the whole verb chain under `root`, returning every output file and
/// the captured stdout of each command.
fn cli_chain(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let p = |rel: &str| root.join(rel).to_str().unwrap().to_string();
    let frames = p("data/frames/S02/s1/one_r01");
    let steps: Vec<Vec<String>> = vec![
        vec![
            "synth",
            "--words",
            "3",
            "--speakers",
            "2",
            "--reps",
            "2",
            "--frames-min",
            "8",
            "--frames-max",
            "12",
            "--seed",
            "5",
            "--out",
            &p("data"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "localize".into(),
            "--frames".into(),
            frames.clone(),
            "--out".into(),
            p("roi.csv"),
        ],
        vec![
            "extract".into(),
            "--frames".into(),
            frames.clone(),
            "--label".into(),
            "one".into(),
            "--out".into(),
            p("one.csv"),
        ],
        vec![
            "extract".into(),
            "--frames".into(),
            frames.clone(),
            "--roi".into(),
            p("roi.csv"),
            "--out".into(),
            p("one_roi.csv"),
        ],
        vec![
            "plot".into(),
            "--signature".into(),
            p("one.csv"),
            "--out".into(),
            p("plot.csv"),
        ],
        vec![
            "train".into(),
            "--manifest".into(),
            p("data/manifest.json"),
            "--tune-weights".into(),
            "--out".into(),
            p("model"),
        ],
        vec![
            "classify".into(),
            "--model".into(),
            p("model"),
            "--signature".into(),
            p("one.csv"),
        ],
        vec![
            "evaluate".into(),
            "--manifest".into(),
            p("data/manifest.json"),
            "--protocol".into(),
            "speaker-dependent".into(),
            "--out".into(),
            p("reports"),
        ],
        vec![
            "evaluate".into(),
            "--manifest".into(),
            p("data/manifest.json"),
            "--protocol".into(),
            "speaker-independent".into(),
            "--distance".into(),
            "interp".into(),
            "--out".into(),
            p("reports"),
        ],
        vec![
            "evaluate".into(),
            "--manifest".into(),
            p("data/manifest.json"),
            "--protocol".into(),
            "loo".into(),
            "--out".into(),
            p("reports"),
        ],
    ];
    let mut stdout = Vec::new();
    for args in &steps {
        let out = Command::new(env!("CARGO_BIN_EXE_lipread"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
        }
        // stdout mentions absolute paths; strip the run root so reruns compare
        let text = String::from_utf8_lossy(&out.stdout).replace(root.to_str().unwrap(), "<root>");
        stdout.extend_from_slice(format!("$ {}\n{text}", args[0]).as_bytes());
    }
    let mut files = snapshot(root);
    files.insert(PathBuf::from("<stdout>"), stdout);
    Ok(files)
}

fn cli_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (fa, fb) = (cli_chain(&a)?, cli_chain(&b)?);
    ensure(fa.len() > 10, "too few outputs")?;
    ensure(fa.keys().eq(fb.keys()), "runs wrote different file sets")?;
    for (k, v) in &fa {
        ensure(fb[k] == *v, format!("{} differs between runs", k.display()))?;
    }
    Ok(format!(
        "7 verbs, {} output files byte-identical across reruns",
        fa.len() - 1
    ))
}

fn main() {
    let checks: [Criterion; 9] = [
        ("mutual information oracle", mutual_information_oracle),
        ("quality index oracle", quality_index_oracle),
        ("haar round trip", haar_round_trip),
        ("dtw exhaustive oracle", dtw_oracle),
        ("signature contract", signature_contract),
        ("localization iou", localization_iou),
        ("end-to-end recognition", end_to_end),
        ("performance budget", performance_budget),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
