//! Map the classifier's learned 26-dim features into the plane with t-SNE
//! and render a class-colored scatter plot.

use ringnet::cli::{format, svg};
use ringnet::models::{build_supervised_cnn, InitConfig};
use ringnet::optim::{train, LossKind, SgdConfig};
use ringnet::preprocess::{prepare, PreprocessPath};
use ringnet::synth::{generate_dataset, SynthConfig};
use ringnet::tsne::{conditional_affinities, tsne_embed, TsneConfig};

fn main() -> ringnet::Result<()> {
    let train_cfg = SynthConfig {
        counts_per_class: 120,
        seed: 31,
        ..SynthConfig::default()
    };
    let view_cfg = SynthConfig {
        counts_per_class: 40,
        seed: 32,
        ..SynthConfig::default()
    };
    let (train_grids, train_labels) = generate_dataset(&train_cfg)?;
    let (view_grids, view_labels) = generate_dataset(&view_cfg)?;

    let train_pre = prepare(&train_grids, PreprocessPath::Supervised)?;
    let view_pre = prepare(&view_grids, PreprocessPath::Supervised)?;
    let inputs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();

    let mut model = build_supervised_cnn(&InitConfig { seed: 33 })?;
    let cfg = SgdConfig {
        epochs: 10,
        seed: 34,
        ..SgdConfig::supervised()
    };
    train(
        &mut model,
        &inputs,
        Some(&train_labels),
        LossKind::CrossEntropy,
        cfg,
    )?;

    // 26-dim representation from the last hidden layer
    let features: Vec<Vec<f64>> = view_pre
        .iter()
        .map(|g| model.extract_features(g))
        .collect::<ringnet::Result<_>>()?;
    println!(
        "extracted {} feature vectors of length {}",
        features.len(),
        features[0].len()
    );

    let p = conditional_affinities(&features, 25.0)?;
    let tsne_cfg = TsneConfig {
        iters: 400,
        seed: 35,
        ..TsneConfig::default()
    };
    let (embedding, trace) = tsne_embed(&p, &tsne_cfg)?;
    println!(
        "t-SNE finished, KL {:.4} -> {:.4}",
        trace[0],
        trace.last().unwrap()
    );

    let embedding = embedding.with_labels(view_labels)?;
    std::fs::create_dir_all("examples-out")?;
    format::write_text(
        std::path::Path::new("examples-out/embedding.csv"),
        &format::embedding_csv(&embedding)?,
    )?;
    format::write_text(
        std::path::Path::new("examples-out/tsne.svg"),
        &svg::scatter_svg(&embedding, "t-SNE of cnn features")?,
    )?;
    println!("wrote examples-out/embedding.csv and examples-out/tsne.svg");
    Ok(())
}
