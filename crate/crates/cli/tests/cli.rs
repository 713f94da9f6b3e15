use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rcnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcnn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

const TINY_NET: &str = "name tiny
recurrent units=8
conv2d maps=2 act=elu
dense units=16 act=elu
linear_output units=5
";

const SPEC: &str = "n_phonemes = 4
feature_dim = 6
min_duration = 2
max_duration = 3
min_length = 2
max_length = 4
";

/// A small synthetic corpus, a network file and a training config.
fn setup(dir: &Path, epochs: usize) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    std::fs::write(dir.join("spec.toml"), SPEC).unwrap();
    std::fs::write(dir.join("net.txt"), TINY_NET).unwrap();
    let out = rcnn(&[
        "synth",
        "--spec",
        s(&dir.join("spec.toml")),
        "--out",
        s(&data),
        "--n",
        "20",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let config = dir.join("train.toml");
    std::fs::write(
        &config,
        format!(
            "network_file = \"{}\"\nlr = 0.01\nbatch_size = 4\nepochs = {epochs}\nseed = 2\ncheckpoint_every = 1\n",
            s(&dir.join("net.txt"))
        ),
    )
    .unwrap();
    (data, config)
}

#[test]
fn synth_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, empty) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("e"));
    for d in [&a, &b] {
        assert_eq!(code(&rcnn(&["synth", "--out", s(d), "--n", "100", "--seed", "3"])), 0);
    }
    assert_eq!(std::fs::read_dir(a.join("feat")).unwrap().count(), 100);
    assert_eq!(std::fs::read_dir(a.join("phn")).unwrap().count(), 100);
    assert_eq!(tree(&a), tree(&b));
    assert_eq!(code(&rcnn(&["synth", "--out", s(&empty), "--n", "0"])), 0);
    assert_eq!(std::fs::read_dir(empty.join("feat")).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_1_without_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = rcnn(&[
        "train",
        "--config",
        "/nonexistent.toml",
        "--data",
        ".",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!out_dir.exists());
    let out = rcnn(&["train", "--data", "."]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&rcnn(&["synth", "--out", s(&out_dir), "--n", "1", "--bogus"])), 1);
    assert!(!out_dir.exists());
    assert_eq!(code(&rcnn(&["frobnicate"])), 1);
    assert_eq!(code(&rcnn(&["--help"])), 0);
}

#[test]
fn catalog_lists_and_prints() {
    let out = rcnn(&["catalog"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l == "Res-RC2"));
    let out = rcnn(&["catalog", "RC2-toy"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("name RC2-toy\n"));
    assert_eq!(code(&rcnn(&["catalog", "RC9"])), 1);
}

#[test]
fn zero_epochs_writes_header_only_curve() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = setup(dir.path(), 0);
    let out_dir = dir.path().join("run");
    let out = rcnn(&[
        "train",
        "--config",
        s(&config),
        "--data",
        s(&data),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(out_dir.join("tiny_curve.csv")).unwrap();
    assert_eq!(curve, "epoch,wall_clock_minutes,train_cost,val_cost,val_per\n");
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = setup(dir.path(), 3);
    let part = dir.path().join("part");
    let out = rcnn(&[
        "partition",
        "--data",
        s(&data),
        "--out",
        s(&part),
        "--val",
        "4",
        "--test",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("run");
    let train = |out_dir: &Path| {
        rcnn(&[
            "train",
            "--config",
            s(&config),
            "--data",
            s(&data),
            "--out",
            s(out_dir),
            "--partition",
            s(&part),
        ])
    };
    let out = train(&run);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(run.join("tiny_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    for e in 1..=3 {
        assert!(run.join(format!("tiny_{e}.ckpt")).is_file());
    }
    let log = std::fs::read_to_string(run.join("tiny_batches.log")).unwrap();
    assert_eq!(log.lines().count(), 3 * 3);

    // Identical inputs give identical checkpoints and batch logs.
    let again = dir.path().join("again");
    assert_eq!(code(&train(&again)), 0);
    for f in ["tiny_3.ckpt", "tiny_batches.log", "network.txt", "norm_stats.txt"] {
        assert_eq!(
            std::fs::read(run.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }

    let ckpt = run.join("tiny_3.ckpt");
    let test_ids = part.join("test.txt");
    let decode = |name: &str, extra: &[&str]| -> String {
        let path = dir.path().join(name);
        let mut args = vec![
            "decode",
            "--ckpt",
            s(&ckpt),
            "--data",
            s(&data),
            "--ids",
            s(&test_ids),
            "--out",
        ];
        args.push(s(&path));
        args.extend_from_slice(extra);
        let out = rcnn(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(path).unwrap()
    };
    let greedy = decode("greedy.txt", &["--beam", "1"]);
    assert_eq!(greedy.lines().count(), 4);
    let lm = dir.path().join("lm.txt");
    let out = rcnn(&["lm-train", "--data", s(&data), "--partition", s(&part), "--out", s(&lm)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let beam = decode("beam.txt", &["--beam", "8"]);
    let beam_lm0 = decode("beam_lm0.txt", &["--beam", "8", "--lm", s(&lm), "--lambda", "0"]);
    assert_eq!(beam, beam_lm0);
    decode("beam_lm.txt", &["--beam", "8", "--lm", s(&lm), "--lambda", "0.5"]);

    let csv = dir.path().join("per.csv");
    let out = rcnn(&[
        "score",
        "--refs",
        s(&data),
        "--hyps",
        s(&dir.path().join("beam.txt")),
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(report.lines().count(), 1 + 4 + 1);
    assert!(report.lines().last().unwrap().starts_with("ALL,"));

    // Corrupt checkpoint: data error.
    let bad = run.join("bad.ckpt");
    std::fs::write(&bad, b"NOTACKPT").unwrap();
    let out = rcnn(&[
        "decode",
        "--ckpt",
        s(&bad),
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("x.txt")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn score_identity_and_empty_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs");
    std::fs::create_dir_all(refs.join("phn")).unwrap();
    std::fs::write(refs.join("alphabet.txt"), "a b c\n").unwrap();
    std::fs::write(refs.join("phn/u1.txt"), "a b c\n").unwrap();
    std::fs::write(refs.join("phn/u2.txt"), "c a\n").unwrap();
    let score = |hyps: &str| -> String {
        let (h, csv) = (dir.path().join("h.txt"), dir.path().join("per.csv"));
        std::fs::write(&h, hyps).unwrap();
        let out = rcnn(&["score", "--refs", s(&refs), "--hyps", s(&h), "--out", s(&csv)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(csv)
            .unwrap()
            .lines()
            .last()
            .unwrap()
            .to_string()
    };
    assert_eq!(score("u1 0 a b c\nu2 0 c a\n"), "ALL,0,5,0");
    assert_eq!(score("u1\nu2\n"), "ALL,5,5,1");
    // One transposition plus one deletion over five reference symbols.
    assert_eq!(score("u1 -1 b a c\nu2 -1 c\n"), "ALL,2,5,0.4");
    let h = dir.path().join("h.txt");
    std::fs::write(&h, "u9 0 a\n").unwrap();
    let out = rcnn(&[
        "score",
        "--refs",
        s(&refs),
        "--hyps",
        s(&h),
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    assert_eq!(code(&out), 2);
}
