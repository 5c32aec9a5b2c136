use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lipread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipread"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lipread(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Relative path -> contents of every file under `root`.
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

fn small_synth(out: &Path, seed: &str) -> PathBuf {
    ok(&[
        "synth",
        "--words",
        "2",
        "--speakers",
        "2",
        "--reps",
        "2",
        "--frames-min",
        "6",
        "--frames-max",
        "9",
        "--seed",
        seed,
        "--out",
        s(out),
    ]);
    out.join("manifest.json")
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    small_synth(&a, "11");
    small_synth(&b, "11");
    small_synth(&c, "12");
    let sa = snapshot(&a);
    assert!(sa.keys().any(|k| k.ends_with("manifest.json")));
    assert!(sa.keys().any(|k| k.ends_with("roi_gt.csv")));
    assert_eq!(sa, snapshot(&b));
    assert_ne!(sa, snapshot(&c));
}

#[test]
fn full_pipeline_through_the_verbs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let manifest = small_synth(&data, "3");
    let frames = data.join("frames/S01/s1/zero_r00");
    let nframes = fs::read_dir(&frames)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert!(frames.join("roi_gt.csv").exists());

    let roi = tmp.path().join("roi.csv");
    ok(&["localize", "--frames", s(&frames), "--out", s(&roi)]);
    let roi_text = fs::read_to_string(&roi).unwrap();
    assert_eq!(roi_text.lines().next(), Some("frame_index,x,y,w,h"));
    assert_eq!(roi_text.lines().count(), nframes + 1);

    let sig = tmp.path().join("zero.csv");
    ok(&[
        "extract",
        "--frames",
        s(&frames),
        "--roi",
        s(&roi),
        "--label",
        "zero",
        "--subject",
        "S01",
        "--out",
        s(&sig),
    ]);
    let plot = ok(&["plot", "--signature", s(&sig)]);
    assert_eq!(plot.lines().next(), Some("frame,signal,value"));
    assert_eq!(plot.lines().count(), 1 + 8 * nframes);

    let model = tmp.path().join("model");
    ok(&["train", "--manifest", s(&manifest), "--out", s(&model)]);
    assert!(model.join("index.json").exists());
    let train_sig = model.join("examples/00000.csv");
    let first = fs::read_to_string(&train_sig).unwrap();
    let label = first
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .find_map(|t| t.strip_prefix("label="))
        .unwrap()
        .to_string();
    let out = ok(&[
        "classify",
        "--model",
        s(&model),
        "--signature",
        s(&train_sig),
        "--k",
        "1",
    ]);
    let mut head = out.lines().next().unwrap().split_whitespace();
    assert_eq!(head.next(), Some(label.as_str()));
    assert_eq!(head.next(), Some("0.000000"));
    assert!(out.contains("rank,label,distance"));

    let by_frames = ok(&["classify", "--model", s(&model), "--frames", s(&frames)]);
    assert!(by_frames.lines().next().unwrap().starts_with(char::is_alphabetic));

    let r1 = tmp.path().join("r1");
    let r2 = tmp.path().join("r2");
    for r in [&r1, &r2] {
        ok(&[
            "evaluate",
            "--manifest",
            s(&manifest),
            "--protocol",
            "speaker-independent",
            "--k",
            "1",
            "--out",
            s(r),
        ]);
    }
    assert!(r1.join("speaker-independent.json").exists());
    assert!(r1.join("speaker-independent.txt").exists());
    assert_eq!(snapshot(&r1), snapshot(&r2));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lipread(&["synth", "--words", "0", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--words"));

    assert_eq!(
        lipread(&["evaluate", "--manifest", "m.json", "--protocol", "nope", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lipread(&["train", "--manifest", "m.json", "--k", "0", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(lipread(&["frobnicate"]).status.code(), Some(2));

    let solo = tmp.path().join("solo");
    ok(&[
        "synth",
        "--words",
        "2",
        "--speakers",
        "1",
        "--reps",
        "1",
        "--frames-min",
        "6",
        "--frames-max",
        "8",
        "--out",
        s(&solo),
    ]);
    let solo_manifest = solo.join("manifest.json");
    let si = lipread(&[
        "evaluate",
        "--manifest",
        s(&solo_manifest),
        "--protocol",
        "speaker-independent",
        "--out",
        s(&solo),
    ]);
    assert_eq!(si.status.code(), Some(2));

    let missing = tmp.path().join("missing");
    assert_eq!(lipread(&["localize", "--frames", s(&missing)]).status.code(), Some(3));
    assert_eq!(lipread(&["plot", "--signature", s(&missing)]).status.code(), Some(3));

    let model = tmp.path().join("model");
    fs::create_dir_all(&model).unwrap();
    fs::write(
        model.join("index.json"),
        r#"{"mode":"dtw","k":1,"weights":[1,1,1,1,1,1,1,1],"interp_len":32,"examples":[]}"#,
    )
    .unwrap();
    let sig = tmp.path().join("sig.csv");
    fs::write(&sig, "frame,H,W,M,Q,R,ER,RC,T\n0,0,0,0,0,0,0,0,0\n").unwrap();
    assert_eq!(
        lipread(&["classify", "--model", s(&model), "--signature", s(&sig)])
            .status
            .code(),
        Some(4)
    );
    fs::write(model.join("index.json"), "{\"not\": \"a model\"}").unwrap();
    assert_eq!(
        lipread(&["classify", "--model", s(&model), "--signature", s(&sig)])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn help_shows_defaults() {
    let out = ok(&["evaluate", "--help"]);
    for flag in [
        "--k",
        "--distance",
        "--interp-len",
        "--weights",
        "--tune-weights",
        "--protocol",
        "--seed",
    ] {
        assert!(out.contains(flag), "missing {flag}");
    }
    assert!(out.contains("[default: 5]"));
    assert!(out.contains("[default: speaker-dependent]"));
    assert!(ok(&["synth", "--help"]).contains("[default: 10]"));
}
