//! End-to-end exercises of the compiled binary: every subcommand runs
//! against real files in a scratch directory, and determinism shows up as
//! byte-identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ringnet-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringnet"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_defaults_match_the_desk_scale_split() {
    let dir = scratch("defaults");
    let stdout = run_ok(&["generate", "--out", dir.to_str().unwrap()]);
    assert!(stdout.contains("4500 events"));
    assert!(stdout.contains("1500 events"));
    let train = fs::read(dir.join("train.dybs")).unwrap();
    let test = fs::read(dir.join("test.dybs")).unwrap();
    assert_eq!(train.len(), 10 + 4500 * 769);
    assert_eq!(test.len(), 10 + 1500 * 769);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn generate_is_deterministic_and_balanced() {
    let dir = scratch("gen");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let stdout = run_ok(&[
            "generate",
            "--counts",
            "12",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(stdout.contains("60 events"));
        assert!(stdout.contains("muon"));
    }
    let a = fs::read(out_a.join("train.dybs")).unwrap();
    let b = fs::read(out_b.join("train.dybs")).unwrap();
    assert_eq!(a, b, "same seed must produce byte-identical files");
    assert_eq!(a.len(), 10 + 60 * (1 + 768));

    let t = fs::read(out_a.join("test.dybs")).unwrap();
    assert_ne!(a, t, "train and test draws differ");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn train_eval_embed_tsne_round_trip() {
    let dir = scratch("pipe");
    let out = dir.to_str().unwrap();
    run_ok(&["generate", "--counts", "30", "--seed", "9", "--out", out]);
    let train = dir.join("train.dybs");
    let test = dir.join("test.dybs");

    // quick classifier training
    let stdout = run_ok(&[
        "train",
        "--data",
        train.to_str().unwrap(),
        "--model",
        "cnn",
        "--epochs",
        "6",
        "--seed",
        "3",
        "--out",
        out,
    ]);
    assert!(stdout.contains("epoch   6/6"));
    assert!(dir.join("cnn.nlns").exists());
    let loss_csv = fs::read_to_string(dir.join("cnn_loss.csv")).unwrap();
    assert!(loss_csv.starts_with("epoch,mean_loss\n"));
    assert_eq!(loss_csv.lines().count(), 7);

    // baselines trained on the same files
    run_ok(&[
        "baselines",
        "--train-data",
        train.to_str().unwrap(),
        "--test-data",
        test.to_str().unwrap(),
        "--epochs",
        "10",
        "--out",
        out,
    ]);
    assert!(dir.join("knn.nlns").exists());
    assert!(dir.join("svm.nlns").exists());
    let baselines = fs::read_to_string(dir.join("baselines.kv")).unwrap();
    assert!(baselines.contains("knn.overall_accuracy="));
    assert!(baselines.contains("svm.f1.ibd-prompt="));

    // eval accepts a comma-separated model list and reports each kind
    let stdout = run_ok(&[
        "eval",
        "--model",
        &format!(
            "{},{},{}",
            dir.join("cnn.nlns").display(),
            dir.join("knn.nlns").display(),
            dir.join("svm.nlns").display()
        ),
        "--data",
        test.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(stdout.contains("F1-score"));
    let kv = fs::read_to_string(dir.join("metrics.kv")).unwrap();
    for method in ["cnn", "knn", "svm"] {
        for class in ["ibd-prompt", "ibd-delay", "muon", "flasher", "other"] {
            assert!(
                kv.contains(&format!("{method}.f1.{class}=")),
                "missing {method}/{class}"
            );
            assert!(kv.contains(&format!("{method}.accuracy.{class}=")));
        }
    }

    // features: 26 + 1 columns for the cnn
    run_ok(&[
        "embed",
        "--model",
        dir.join("cnn.nlns").to_str().unwrap(),
        "--data",
        test.to_str().unwrap(),
        "--out",
        out,
    ]);
    let features = fs::read_to_string(dir.join("features.csv")).unwrap();
    assert_eq!(features.lines().next().unwrap().split(',').count(), 27);
    assert_eq!(features.lines().count(), 1 + 150);

    // t-SNE map twice with one seed: byte-identical SVG and CSV
    for sub in ["t1", "t2"] {
        let tdir = dir.join(sub);
        run_ok(&[
            "tsne",
            "--model",
            dir.join("cnn.nlns").to_str().unwrap(),
            "--data",
            test.to_str().unwrap(),
            "--perplexity",
            "12",
            "--iters",
            "120",
            "--seed",
            "17",
            "--out",
            tdir.to_str().unwrap(),
        ]);
    }
    let svg_a = fs::read(dir.join("t1/tsne.svg")).unwrap();
    let svg_b = fs::read(dir.join("t2/tsne.svg")).unwrap();
    assert_eq!(svg_a, svg_b, "seeded t-SNE must be byte-deterministic");
    assert_eq!(
        fs::read(dir.join("t1/embedding.csv")).unwrap(),
        fs::read(dir.join("t2/embedding.csv")).unwrap()
    );
    let svg_text = String::from_utf8(svg_a).unwrap();
    assert_eq!(svg_text.matches("<circle").count(), 150);

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn autoencoder_training_and_reconstruction() {
    let dir = scratch("cae");
    let out = dir.to_str().unwrap();
    run_ok(&["generate", "--counts", "24", "--seed", "2", "--out", out]);
    let train = dir.join("train.dybs");

    run_ok(&[
        "train",
        "--data",
        train.to_str().unwrap(),
        "--model",
        "cae",
        "--epochs",
        "12",
        "--seed",
        "6",
        "--out",
        out,
    ]);
    let loss_csv = fs::read_to_string(dir.join("cae_loss.csv")).unwrap();
    let losses: Vec<f64> = loss_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        losses.last().unwrap() < losses.first().unwrap(),
        "training SSE should fall: {losses:?}"
    );

    // 10-dim codes
    run_ok(&[
        "embed",
        "--model",
        dir.join("cae.nlns").to_str().unwrap(),
        "--data",
        dir.join("test.dybs").to_str().unwrap(),
        "--out",
        out,
    ]);
    let features = fs::read_to_string(dir.join("features.csv")).unwrap();
    assert_eq!(features.lines().next().unwrap().split(',').count(), 11);

    let stdout = run_ok(&[
        "reconstruct",
        "--model",
        dir.join("cae.nlns").to_str().unwrap(),
        "--data",
        dir.join("test.dybs").to_str().unwrap(),
        "--indices",
        "0,3,7",
        "--out",
        out,
    ]);
    assert!(stdout.contains("reconstruction sse"));
    let svg = fs::read_to_string(dir.join("reconstruct.svg")).unwrap();
    // three panels x two 8x24 grids + background
    assert_eq!(svg.matches("<rect").count(), 3 * 384 + 1);

    // out-of-range index is a data error with a machine-readable line
    let out_err = run(&[
        "reconstruct",
        "--model",
        dir.join("cae.nlns").to_str().unwrap(),
        "--data",
        dir.join("test.dybs").to_str().unwrap(),
        "--indices",
        "9999",
        "--out",
        out,
    ]);
    assert_eq!(out_err.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out_err.stderr);
    assert!(stderr.starts_with("error: kind=Data"), "stderr: {stderr}");

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn zero_learning_rate_preserves_initialization() {
    let dir = scratch("lr0");
    let out = dir.to_str().unwrap();
    run_ok(&["generate", "--counts", "6", "--seed", "4", "--out", out]);
    let train = dir.join("train.dybs");

    // with lr 0 the saved model is the initialization regardless of the
    // epoch count, so two different-length runs agree bitwise
    for (sub, epochs) in [("a", "1"), ("b", "5")] {
        let tdir = dir.join(sub);
        run_ok(&[
            "train",
            "--data",
            train.to_str().unwrap(),
            "--model",
            "cnn",
            "--epochs",
            epochs,
            "--learning-rate",
            "0",
            "--seed",
            "8",
            "--out",
            tdir.to_str().unwrap(),
        ]);
    }
    let a = fs::read(dir.join("a/cnn.nlns")).unwrap();
    let b = fs::read(dir.join("b/cnn.nlns")).unwrap();
    assert_eq!(a, b);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn overfit_mode_memorizes_a_tiny_training_set() {
    let dir = scratch("overfit");
    let out = dir.to_str().unwrap();
    run_ok(&["generate", "--counts", "10", "--seed", "12", "--out", out]);
    let train = dir.join("train.dybs");

    run_ok(&[
        "train",
        "--data",
        train.to_str().unwrap(),
        "--model",
        "cnn",
        "--epochs",
        "300",
        "--batch-size",
        "10",
        "--seed",
        "13",
        "--out",
        out,
    ]);
    // evaluating on the training file: memorization means 100% accuracy
    run_ok(&[
        "eval",
        "--model",
        dir.join("cnn.nlns").to_str().unwrap(),
        "--data",
        train.to_str().unwrap(),
        "--out",
        out,
    ]);
    let kv = fs::read_to_string(dir.join("metrics.kv")).unwrap();
    assert!(
        kv.contains("cnn.overall_accuracy=1.000000"),
        "expected perfect training accuracy, got:\n{kv}"
    );
    // a perfectly separated evaluation yields F1 = 1 for every class
    for class in ["ibd-prompt", "ibd-delay", "muon", "flasher", "other"] {
        assert!(
            kv.contains(&format!("cnn.f1.{class}=1.000000")),
            "kv:\n{kv}"
        );
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_is_honored_and_unknown_keys_fail() {
    let dir = scratch("cfg");
    let cfg_path = dir.join("gen.cfg");
    fs::write(&cfg_path, "counts=8\nseed=3\n").unwrap();
    run_ok(&[
        "generate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.join("o").to_str().unwrap(),
    ]);
    let bytes = fs::read(dir.join("o/train.dybs")).unwrap();
    assert_eq!(bytes.len(), 10 + 40 * 769);

    let out = run(&[
        "generate",
        "--bogus-flag",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("kind=Config"));
    assert!(stderr.contains("bogus-flag"));

    // dataset/model mixups are format errors
    let out = run(&[
        "eval",
        "--model",
        dir.join("o/train.dybs").to_str().unwrap(),
        "--data",
        dir.join("o/train.dybs").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=Format"));

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn help_text_documents_every_subcommand() {
    let stdout = run_ok(&["help"]);
    for cmd in [
        "generate",
        "train",
        "eval",
        "embed",
        "tsne",
        "reconstruct",
        "baselines",
    ] {
        assert!(stdout.contains(cmd), "help is missing {cmd}");
    }
    let no_args = run(&[]);
    assert_eq!(no_args.status.code(), Some(1));
}

#[test]
fn dataset_files_round_trip_through_the_library() {
    let dir = scratch("roundtrip");
    let out = dir.to_str().unwrap();
    run_ok(&["generate", "--counts", "7", "--seed", "19", "--out", out]);
    let path = dir.join("train.dybs");
    let bytes = fs::read(&path).unwrap();
    let (grids, labels) = ringnet::cli::format::parse_dataset(&bytes).unwrap();
    let rewritten = ringnet::cli::format::dataset_bytes(&grids, &labels).unwrap();
    assert_eq!(bytes, rewritten);
    assert_eq!(Path::new(&path).extension().unwrap(), "dybs");
    fs::remove_dir_all(&dir).ok();
}
