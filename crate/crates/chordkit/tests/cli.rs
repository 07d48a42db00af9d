use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: &str = "\
input_dim = 16
num_heads = 2
ffn_dim = 32
num_layers = 1
depthwise_kernel = 7
max_len = 64
segment_length = 64
batch_size = 4
max_epochs = 2
";

fn chordkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordkit")).args(args).env_remove("CHORDKIT_DATA").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = chordkit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn count(dir: &Path, ext: &str) -> usize {
    fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext)).count()
}

/// Renders `tracks` short synthetic tracks and their unshifted features.
fn corpus(tracks: usize) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    let n = tracks.to_string();
    ok(&["synth", "--out", s(&root), "--tracks", &n, "--min-seconds", "3", "--max-seconds", "4", "--seed", "1"]);
    ok(&["--data", s(&root), "features"]);
    fs::write(root.join("quick.cfg"), QUICK).unwrap();
    (dir, root)
}

fn train(root: &Path, out: &str) -> PathBuf {
    let run = root.join(out);
    ok(&["--data", s(root), "--config", s(&root.join("quick.cfg")), "train", "--out", s(&run), "--quiet", "--seed", "3"]);
    run
}

fn metric(dir: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
    line.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn features_pair_files_and_augment() {
    let (_dir, root) = corpus(2);
    assert_eq!(count(&root.join("features"), "cqtf"), 2);
    let aug = root.join("aug");
    ok(&["features", "--audio", s(&root.join("audio")), "--annotations", s(&root.join("annotations")), "--out", s(&aug), "--augment"]);
    assert_eq!(count(&aug, "cqtf"), 24);
    assert!(aug.join("synth000@-5.cqtf").exists() && aug.join("synth001@+6.cqtf").exists());

    fs::remove_file(root.join("annotations/synth001.lab")).unwrap();
    let lone = root.join("lone");
    let out = ok(&["--data", s(&root), "features", "--out", s(&lone)]);
    assert_eq!(count(&lone, "cqtf"), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("synth001"));
}

#[test]
fn train_decode_eval_round() {
    let (_dir, root) = corpus(6);
    let a = train(&root, "run_a");
    let b = train(&root, "run_b");
    for f in ["best.ckpt", "last.ckpt", "weights.csv", "split.txt", "manifest.json"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
    let log = fs::read(a.join("train_log.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&log).lines().count(), 3);
    assert_eq!(log, fs::read(b.join("train_log.csv")).unwrap());

    let ckpt = a.join("best.ckpt");
    let decode = |name: &str, extra: &[&str]| {
        let out = root.join(name);
        let mut args = vec!["--data", s(&root), "decode", "--checkpoint", s(&ckpt), "--out", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        out
    };
    let greedy = decode("greedy", &["--greedy"]);
    let zero = decode("zero", &["--transition-penalty", "0"]);
    let flat = decode("flat", &["--transition-penalty", "1e9"]);
    assert_eq!(count(&greedy, "lab"), 6);
    for i in 0..6 {
        let name = format!("synth{i:03}.lab");
        assert_eq!(fs::read(greedy.join(&name)).unwrap(), fs::read(zero.join(&name)).unwrap());
        assert_eq!(fs::read_to_string(flat.join(&name)).unwrap().lines().count(), 1);
    }

    let ev = root.join("eval");
    ok(&["--data", s(&root), "eval", "--estimate", s(&zero), "--out", s(&ev)]);
    for f in ["metrics.csv", "confusion.csv", "confusion.svg", "quality_recall.csv", "summary.json"] {
        assert!(ev.join(f).exists(), "missing {f}");
    }
    let acc = metric(&ev, "acc_frame");
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn train_rejects_bad_settings() {
    let (_dir, root) = corpus(5);
    let cfg = root.join("quick.cfg");
    let out = chordkit(&["--data", s(&root), "--config", s(&cfg), "train", "--fold", "6"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fold"));

    let out = chordkit(&["--data", s(&root), "train", "--set", "num_heads=3", "--set", "colour=red"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour"), "{err}");

    let out = chordkit(&["--data", s(&root), "--config", s(&cfg), "train", "--gamma", "1.5"]);
    assert!(!out.status.success());
}

#[test]
fn eval_matches_hand_arithmetic() {
    let dir = TempDir::new().unwrap();
    let (r, e) = (dir.path().join("ref"), dir.path().join("est"));
    fs::create_dir_all(&r).unwrap();
    fs::create_dir_all(&e).unwrap();
    fs::write(r.join("a.lab"), "0 10 C:maj\n").unwrap();
    fs::write(r.join("b.lab"), "0 30 E:min\n").unwrap();
    fs::write(e.join("a.lab"), "0 5 C:maj\n5 10 D:maj\n").unwrap();
    fs::write(e.join("b.lab"), "0 15 E:min\n15 30 F:maj\n").unwrap();
    let out = dir.path().join("out");
    ok(&["eval", "--reference", s(&r), "--estimate", s(&e), "--out", s(&out)]);
    assert_eq!(metric(&out, "root"), 50.0);
    assert_eq!(metric(&out, "mirex"), 50.0);
    let header: Vec<String> =
        fs::read_to_string(out.join("metrics.csv")).unwrap().lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(header, ["root", "thirds", "majmin", "triads", "sevenths", "tetrads", "mirex", "acc_frame", "acc_class"]);

    let same = dir.path().join("same");
    ok(&["eval", "--reference", s(&r), "--estimate", s(&r), "--out", s(&same)]);
    for m in ["root", "thirds", "majmin", "triads", "sevenths", "tetrads", "mirex"] {
        assert_eq!(metric(&same, m), 100.0, "{m}");
    }
    assert_eq!(metric(&same, "acc_frame"), 1.0);
    assert_eq!(metric(&same, "acc_class"), 1.0);
}

#[test]
fn eval_without_common_tracks_fails() {
    let dir = TempDir::new().unwrap();
    let (r, e) = (dir.path().join("ref"), dir.path().join("est"));
    fs::create_dir_all(&r).unwrap();
    fs::create_dir_all(&e).unwrap();
    fs::write(r.join("a.lab"), "0 10 C:maj\n").unwrap();
    fs::write(e.join("b.lab"), "0 10 C:maj\n").unwrap();
    let out = chordkit(&["eval", "--reference", s(&r), "--estimate", s(&e), "--out", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
}

#[test]
fn report_writes_tables() {
    let (_dir, root) = corpus(2);
    let out = root.join("report");
    ok(&["--data", s(&root), "report", "--out", s(&out)]);
    let weights = fs::read_to_string(out.join("weights.csv")).unwrap();
    assert!(weights.lines().count() > 1);
    assert!(out.join("quality_distribution.csv").exists());
}
