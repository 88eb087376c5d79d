//! Command-line surface: `generate`, `train`, `eval`, `embed`, `tsne`,
//! `reconstruct` and `baselines`, plus flag/config-file handling.
//!
//! Parameters come from `--key value` flags and an optional plain-text
//! `key=value` config file (`--config FILE`); flags override the file, and
//! unknown keys are errors. Every command is deterministic given its flags,
//! inputs and seed, and writes its artifacts under `--out`.

pub mod format;
pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::svm_train;
use crate::baselines::KnnModel;
use crate::error::{Error, Result};
use crate::metrics::{
    accuracy_per_class, confusion, f1_per_class, overall_accuracy, ConfusionMatrix,
};
use crate::models::{build_conv_autoencoder, build_supervised_cnn, InitConfig, ModelKind};
use crate::optim::{LossKind, SgdConfig, Trainer};
use crate::preprocess::{prepare, PreprocessPath, PreprocessedGrid};
use crate::rng::Prng;
use crate::synth::{generate_dataset, EventGrid, EventLabel, SynthConfig};
use crate::tsne::{conditional_affinities, tsne_embed, TsneConfig};

use format::StoredModel;

/// Run the CLI and map the outcome onto an exit code, printing a
/// machine-readable error line on failure.
pub fn main_with_args(args: Vec<String>) -> i32 {
    match run(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: kind={} msg=\"{}\"", e.kind_name(), e.message());
            1
        }
    }
}

pub fn run(args: &[String]) -> Result<()> {
    let Some(command) = args.first() else {
        eprint!("{}", usage());
        return Err(Error::Config("missing subcommand".into()));
    };
    if matches!(command.as_str(), "help" | "--help" | "-h") {
        print!("{}", usage());
        return Ok(());
    }
    let opts = Options::parse(&args[1..])?;
    match command.as_str() {
        "generate" => cmd_generate(opts),
        "train" => cmd_train(opts),
        "eval" => cmd_eval(opts),
        "embed" => cmd_embed(opts),
        "tsne" => cmd_tsne(opts),
        "reconstruct" => cmd_reconstruct(opts),
        "baselines" => cmd_baselines(opts),
        other => Err(Error::Config(format!("unknown subcommand '{other}'"))),
    }
}

pub fn usage() -> String {
    "\
event-image pipeline

USAGE: ringnet <command> [--key value]... [--config FILE]

Flags override config-file entries; unknown keys are errors. All output
lands under --out (default \"out\").

COMMANDS
  generate     write synthetic train/test dataset files
    --seed N           master seed (default 7)
    --out DIR          output directory (default out)
    --noise-level X    per-tube noise scale (default 1.0)
    --train-counts N   events per class, training file (default 900)
    --test-counts N    events per class, test file (default 300)
    --counts N         override both counts at once
  train        train a model on a dataset file
    --data FILE        training dataset (required)
    --model KIND       cnn | cae (required)
    --out DIR          output directory
    --seed N           init + shuffling seed (default 7)
    --epochs N         default 30 (cnn) / 40 (cae)
    --batch-size N     default 64
    --learning-rate X  default 0.01 (cnn) / 0.0005 (cae)
    --momentum X       default 0.9
  eval         classify a test set and report per-class F1/accuracy
    --model PATHS      comma-separated model files (cnn/knn/svm)
    --data FILE        test dataset (required)
    --out DIR          writes metrics.txt and metrics.kv
  baselines    train + evaluate the k-NN and SVM baselines
    --train-data FILE  training dataset (required)
    --test-data FILE   test dataset (required)
    --k N              neighbor count, odd (default 5)
    --lambda X         SVM regularization (default 0.0001)
    --epochs N         SVM epochs (default 30)
    --seed N           default 7
    --out DIR          writes knn.nlns, svm.nlns, baselines.txt/.kv
  embed        export learned features (26-dim cnn / 10-dim cae) as CSV
    --model FILE --data FILE --out DIR
  tsne         t-SNE map of learned features: embedding.csv + tsne.svg
    --model FILE --data FILE --out DIR
    --perplexity X     default 30
    --iters N          default 1000
    --learning-rate X  default 100
    --dims N           2 or 3 (default 2)
    --max-points N     subsample cap (default 1000)
    --seed N           default 7
  reconstruct  paired original/reconstruction heat maps (cae)
    --model FILE --data FILE --out DIR
    --indices LIST     comma-separated event indices (default 0,1,2,3)
  help         print this text
"
    .to_string()
}

// ---------------------------------------------------------------------
// options

struct Options {
    values: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Options {
    fn parse(args: &[String]) -> Result<Options> {
        let mut flags = BTreeMap::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(stripped) = arg.strip_prefix("--") else {
                return Err(Error::Config(format!("expected --flag, got '{arg}'")));
            };
            let (key, value) = if let Some((k, v)) = stripped.split_once('=') {
                (k.to_string(), v.to_string())
            } else {
                let Some(value) = args.get(i + 1) else {
                    return Err(Error::Config(format!("flag --{stripped} needs a value")));
                };
                i += 1;
                (stripped.to_string(), value.clone())
            };
            flags.insert(key, value);
            i += 1;
        }

        let mut values = BTreeMap::new();
        if let Some(path) = flags.remove("config") {
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("reading config {path}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(Error::Config(format!(
                        "config line {}: expected key=value, got '{line}'",
                        lineno + 1
                    )));
                };
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        values.extend(flags);
        Ok(Options {
            values,
            used: BTreeSet::new(),
        })
    }

    fn opt_str(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.values.get(key).cloned()
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        self.opt_str(key).unwrap_or_else(|| default.to_string())
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.opt_str(key)
            .ok_or_else(|| Error::Config(format!("missing required flag --{key}")))
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.opt_str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("--{key} '{v}' is not an integer: {e}"))),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.opt_str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("--{key} '{v}' is not an integer: {e}"))),
        }
    }

    fn opt_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.opt_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("--{key} '{v}' is not an integer: {e}"))),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.opt_str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("--{key} '{v}' is not a number: {e}"))),
        }
    }

    fn finish(self) -> Result<()> {
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let list: Vec<String> = unknown.iter().map(|k| format!("--{k}")).collect();
            Err(Error::Config(format!("unknown keys: {}", list.join(", "))))
        }
    }
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    Prng::new(seed).fork(stream).seed()
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io(format!("creating {}: {e}", path.display())))
}

fn class_counts(labels: &[EventLabel]) -> [usize; EventLabel::COUNT] {
    let mut counts = [0usize; EventLabel::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

// ---------------------------------------------------------------------
// commands

fn cmd_generate(mut o: Options) -> Result<()> {
    let seed = o.u64_or("seed", 7)?;
    let out = PathBuf::from(o.str_or("out", "out"));
    let noise = o.f64_or("noise-level", SynthConfig::default().noise_level)?;
    let mut train_counts = o.usize_or("train-counts", 900)?;
    let mut test_counts = o.usize_or("test-counts", 300)?;
    if let Some(c) = o.opt_usize("counts")? {
        train_counts = c;
        test_counts = c;
    }
    o.finish()?;
    ensure_dir(&out)?;

    for (name, counts, stream) in [
        ("train.dybs", train_counts, 1u64),
        ("test.dybs", test_counts, 2u64),
    ] {
        let cfg = SynthConfig {
            noise_level: noise,
            counts_per_class: counts,
            seed: derive_seed(seed, stream),
            ..SynthConfig::default()
        };
        let (grids, labels) = generate_dataset(&cfg)?;
        let path = out.join(name);
        format::write_dataset(&path, &grids, &labels)?;
        println!("wrote {} ({} events)", path.display(), grids.len());
        for (label, n) in EventLabel::ALL.iter().zip(class_counts(&labels)) {
            println!("  {:<11} {n}", label.name());
        }
    }
    Ok(())
}

fn load_grids(path: &Path) -> Result<(Vec<EventGrid>, Vec<EventLabel>)> {
    format::read_dataset(path)
}

fn cmd_train(mut o: Options) -> Result<()> {
    let data = PathBuf::from(o.require("data")?);
    let kind = o.require("model")?;
    let out = PathBuf::from(o.str_or("out", "out"));
    let seed = o.u64_or("seed", 7)?;
    let batch_size = o.usize_or("batch-size", 64)?;
    let momentum = o.f64_or("momentum", 0.9)?;

    let (grids, labels) = load_grids(&data)?;
    let init = InitConfig {
        seed: derive_seed(seed, 10),
    };

    let (mut model, inputs, labels, loss, epochs, learning_rate) = match kind.as_str() {
        "cnn" => {
            let epochs = o.usize_or("epochs", 30)?;
            let lr = o.f64_or("learning-rate", 0.01)?;
            let pre = prepare(&grids, PreprocessPath::Supervised)?;
            let inputs: Vec<Vec<f64>> = pre.iter().map(|g| g.values().to_vec()).collect();
            (
                build_supervised_cnn(&init)?,
                inputs,
                Some(labels),
                LossKind::CrossEntropy,
                epochs,
                lr,
            )
        }
        "cae" => {
            let epochs = o.usize_or("epochs", 40)?;
            let lr = o.f64_or("learning-rate", 0.0005)?;
            let pre = prepare(&grids, PreprocessPath::Unsupervised)?;
            let inputs: Vec<Vec<f64>> = pre.iter().map(|g| g.values().to_vec()).collect();
            (
                build_conv_autoencoder(&init)?,
                inputs,
                None,
                LossKind::SumSquaredError,
                epochs,
                lr,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "--model must be cnn or cae, got '{other}'"
            )))
        }
    };
    o.finish()?;
    ensure_dir(&out)?;

    let cfg = SgdConfig {
        learning_rate,
        momentum,
        batch_size,
        epochs,
        seed: derive_seed(seed, 11),
    };
    let mut trainer = Trainer::new(&model, cfg)?;
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let l = trainer.train_epoch(&mut model, &inputs, labels.as_deref(), loss)?;
        println!("epoch {:>3}/{epochs}: mean loss {l:.6}", epoch + 1);
        losses.push(l);
    }

    let model_path = out.join(format!("{kind}.nlns"));
    format::write_model(&model_path, &StoredModel::Network(model))?;
    let loss_path = out.join(format!("{kind}_loss.csv"));
    format::write_text(&loss_path, &format::loss_csv(&losses))?;
    println!("wrote {} and {}", model_path.display(), loss_path.display());
    Ok(())
}

fn classify_all(
    stored: &StoredModel,
    pre: &[PreprocessedGrid],
    vectors: &[Vec<f64>],
) -> Result<Vec<EventLabel>> {
    match stored {
        StoredModel::Network(m) => {
            if m.kind() != ModelKind::SupervisedCnn {
                return Err(Error::Kind(
                    "an autoencoder cannot be evaluated as a classifier".into(),
                ));
            }
            pre.iter().map(|g| m.predict(g).map(|(l, _)| l)).collect()
        }
        StoredModel::Knn(m) => vectors.iter().map(|v| m.classify(v)).collect(),
        StoredModel::Svm(m) => vectors.iter().map(|v| m.predict(v)).collect(),
    }
}

/// Report column order mirrors the reference table: IBD prompt, IBD
/// delay, muon, flasher, other.
const REPORT_ORDER: [EventLabel; 5] = [
    EventLabel::IbdPrompt,
    EventLabel::IbdDelay,
    EventLabel::Muon,
    EventLabel::Flasher,
    EventLabel::Other,
];

fn render_metrics_text(report: &[(String, ConfusionMatrix)]) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("{:<18}", "measure/method"));
    for label in REPORT_ORDER {
        out.push_str(&format!("{:>12}", label.name()));
    }
    out.push('\n');
    for (section, per_class) in [
        (
            "F1-score",
            f1_per_class as fn(&ConfusionMatrix) -> Result<[f64; 5]>,
        ),
        ("accuracy", accuracy_per_class),
    ] {
        out.push_str(section);
        out.push('\n');
        for (name, cm) in report {
            out.push_str(&format!("  {name:<16}"));
            let values = per_class(cm)?;
            for label in REPORT_ORDER {
                out.push_str(&format!("{:>12.3}", values[label.index()]));
            }
            out.push('\n');
        }
    }
    out.push_str("overall accuracy\n");
    for (name, cm) in report {
        out.push_str(&format!("  {name:<16}{:>12.3}\n", overall_accuracy(cm)?));
    }
    Ok(out)
}

fn render_metrics_kv(report: &[(String, ConfusionMatrix)]) -> Result<String> {
    let mut out = String::new();
    for (name, cm) in report {
        let f1 = f1_per_class(cm)?;
        let acc = accuracy_per_class(cm)?;
        for label in REPORT_ORDER {
            out.push_str(&format!(
                "{name}.f1.{}={:.6}\n",
                label.name(),
                f1[label.index()]
            ));
        }
        for label in REPORT_ORDER {
            out.push_str(&format!(
                "{name}.accuracy.{}={:.6}\n",
                label.name(),
                acc[label.index()]
            ));
        }
        out.push_str(&format!(
            "{name}.overall_accuracy={:.6}\n",
            overall_accuracy(cm)?
        ));
    }
    Ok(out)
}

fn cmd_eval(mut o: Options) -> Result<()> {
    let model_paths = o.require("model")?;
    let data = PathBuf::from(o.require("data")?);
    let out = PathBuf::from(o.str_or("out", "out"));
    o.finish()?;
    ensure_dir(&out)?;

    let (grids, labels) = load_grids(&data)?;
    let pre = prepare(&grids, PreprocessPath::Supervised)?;
    let vectors: Vec<Vec<f64>> = pre.iter().map(|g| g.values().to_vec()).collect();

    let mut report = Vec::new();
    for path in model_paths.split(',') {
        let stored = format::read_model(Path::new(path))?;
        let predictions = classify_all(&stored, &pre, &vectors)?;
        let cm = confusion(&labels, &predictions)?;
        report.push((stored.kind_name().to_string(), cm));
    }

    let text = render_metrics_text(&report)?;
    print!("{text}");
    format::write_text(&out.join("metrics.txt"), &text)?;
    format::write_text(&out.join("metrics.kv"), &render_metrics_kv(&report)?)?;
    println!("wrote {} and metrics.kv", out.join("metrics.txt").display());
    Ok(())
}

fn cmd_baselines(mut o: Options) -> Result<()> {
    let train_data = PathBuf::from(o.require("train-data")?);
    let test_data = PathBuf::from(o.require("test-data")?);
    let k = o.usize_or("k", 5)?;
    let lambda = o.f64_or("lambda", 1e-4)?;
    let epochs = o.usize_or("epochs", 30)?;
    let seed = o.u64_or("seed", 7)?;
    let out = PathBuf::from(o.str_or("out", "out"));
    o.finish()?;
    ensure_dir(&out)?;

    let (train_grids, train_labels) = load_grids(&train_data)?;
    let train_pre = prepare(&train_grids, PreprocessPath::Supervised)?;
    let train_vecs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();

    let (test_grids, test_labels) = load_grids(&test_data)?;
    let test_pre = prepare(&test_grids, PreprocessPath::Supervised)?;
    let test_vecs: Vec<Vec<f64>> = test_pre.iter().map(|g| g.values().to_vec()).collect();

    let knn = KnnModel::fit(train_vecs.clone(), train_labels.clone(), k)?;
    let svm = svm_train(
        &train_vecs,
        &train_labels,
        lambda,
        epochs,
        derive_seed(seed, 30),
    )?;

    format::write_model(&out.join("knn.nlns"), &StoredModel::Knn(knn.clone()))?;
    format::write_model(&out.join("svm.nlns"), &StoredModel::Svm(svm.clone()))?;

    let knn_preds: Vec<EventLabel> = test_vecs
        .iter()
        .map(|v| knn.classify(v))
        .collect::<Result<_>>()?;
    let svm_preds: Vec<EventLabel> = test_vecs
        .iter()
        .map(|v| svm.predict(v))
        .collect::<Result<_>>()?;
    let report = vec![
        ("knn".to_string(), confusion(&test_labels, &knn_preds)?),
        ("svm".to_string(), confusion(&test_labels, &svm_preds)?),
    ];

    let text = render_metrics_text(&report)?;
    print!("{text}");
    format::write_text(&out.join("baselines.txt"), &text)?;
    format::write_text(&out.join("baselines.kv"), &render_metrics_kv(&report)?)?;
    println!(
        "wrote knn.nlns, svm.nlns, baselines.txt, baselines.kv under {}",
        out.display()
    );
    Ok(())
}

/// Learned features plus companion labels for a whole dataset.
fn dataset_features(stored: &StoredModel, grids: &[EventGrid]) -> Result<Vec<Vec<f64>>> {
    let StoredModel::Network(model) = stored else {
        return Err(Error::Kind(
            "feature export needs a cnn or cae model".into(),
        ));
    };
    match model.kind() {
        ModelKind::SupervisedCnn => {
            let pre = prepare(grids, PreprocessPath::Supervised)?;
            pre.iter().map(|g| model.extract_features(g)).collect()
        }
        ModelKind::ConvAutoencoder => {
            let pre = prepare(grids, PreprocessPath::Unsupervised)?;
            pre.iter().map(|g| model.encode(g)).collect()
        }
    }
}

fn cmd_embed(mut o: Options) -> Result<()> {
    let model_path = PathBuf::from(o.require("model")?);
    let data = PathBuf::from(o.require("data")?);
    let out = PathBuf::from(o.str_or("out", "out"));
    o.finish()?;
    ensure_dir(&out)?;

    let stored = format::read_model(&model_path)?;
    let (grids, labels) = load_grids(&data)?;
    let features = dataset_features(&stored, &grids)?;
    let dim = features.first().map(|f| f.len()).unwrap_or(0);

    let path = out.join("features.csv");
    format::write_text(&path, &format::features_csv(&features, &labels)?)?;
    println!(
        "wrote {} ({} rows, {dim}+1 columns)",
        path.display(),
        features.len()
    );
    Ok(())
}

fn cmd_tsne(mut o: Options) -> Result<()> {
    let model_path = PathBuf::from(o.require("model")?);
    let data = PathBuf::from(o.require("data")?);
    let out = PathBuf::from(o.str_or("out", "out"));
    let perplexity = o.f64_or("perplexity", 30.0)?;
    let iters = o.usize_or("iters", 1000)?;
    let learning_rate = o.f64_or("learning-rate", 100.0)?;
    let dims = o.usize_or("dims", 2)?;
    let max_points = o.usize_or("max-points", 1000)?;
    let seed = o.u64_or("seed", 7)?;
    o.finish()?;
    ensure_dir(&out)?;

    let stored = format::read_model(&model_path)?;
    let (grids, labels) = load_grids(&data)?;
    let features = dataset_features(&stored, &grids)?;

    // deterministic subsample, preserving input order
    let (features, labels) = if features.len() > max_points {
        let mut indices: Vec<usize> = (0..features.len()).collect();
        Prng::new(derive_seed(seed, 21)).shuffle(&mut indices);
        let mut keep: Vec<usize> = indices.into_iter().take(max_points).collect();
        keep.sort_unstable();
        (
            keep.iter()
                .map(|&i| features[i].clone())
                .collect::<Vec<_>>(),
            keep.iter().map(|&i| labels[i]).collect::<Vec<_>>(),
        )
    } else {
        (features, labels)
    };

    let p = conditional_affinities(&features, perplexity)?;
    let cfg = TsneConfig {
        dims,
        iters,
        learning_rate,
        seed: derive_seed(seed, 22),
        ..TsneConfig::default()
    };
    let (embedding, trace) = tsne_embed(&p, &cfg)?;
    let embedding = embedding.with_labels(labels)?;

    format::write_text(
        &out.join("embedding.csv"),
        &format::embedding_csv(&embedding)?,
    )?;
    if dims == 2 {
        let title = format!("t-SNE of {} features", stored.kind_name());
        format::write_text(
            &out.join("tsne.svg"),
            &svg::scatter_svg(&embedding, &title)?,
        )?;
    }
    println!(
        "embedded {} points, final KL {:.4}; wrote embedding.csv{}",
        embedding.len(),
        trace.last().copied().unwrap_or(f64::NAN),
        if dims == 2 { " and tsne.svg" } else { "" }
    );
    Ok(())
}

fn cmd_reconstruct(mut o: Options) -> Result<()> {
    let model_path = PathBuf::from(o.require("model")?);
    let data = PathBuf::from(o.require("data")?);
    let out = PathBuf::from(o.str_or("out", "out"));
    let indices_raw = o.str_or("indices", "0,1,2,3");
    o.finish()?;
    ensure_dir(&out)?;

    let stored = format::read_model(&model_path)?;
    let StoredModel::Network(model) = &stored else {
        return Err(Error::Kind("reconstruction needs a cae model".into()));
    };
    if model.kind() != ModelKind::ConvAutoencoder {
        return Err(Error::Kind("reconstruction needs a cae model".into()));
    }

    let (grids, labels) = load_grids(&data)?;
    let pre = prepare(&grids, PreprocessPath::Unsupervised)?;

    let mut panels = Vec::new();
    for field in indices_raw.split(',') {
        let idx: usize = field
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("--indices entry '{field}': {e}")))?;
        if idx >= pre.len() {
            return Err(Error::Data(format!(
                "event index {idx} out of range for {} events",
                pre.len()
            )));
        }
        let recon = model.reconstruct(&pre[idx])?;
        let sse: f64 = recon
            .iter()
            .zip(pre[idx].values())
            .map(|(r, t)| (r - t) * (r - t))
            .sum();
        println!(
            "event {idx} ({}): reconstruction sse {sse:.4}",
            labels[idx].name()
        );
        panels.push(svg::ReconstructionPanel {
            original: pre[idx].values().to_vec(),
            reconstruction: recon,
            caption: format!("event {idx} ({}) sse {sse:.3}", labels[idx].name()),
        });
    }

    let path = out.join("reconstruct.svg");
    format::write_text(&path, &svg::reconstruction_svg(&panels)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
