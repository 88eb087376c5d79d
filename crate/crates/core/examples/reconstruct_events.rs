//! Render original/reconstruction heat-map pairs from a briefly trained
//! autoencoder.

use ringnet::cli::{format, svg};
use ringnet::models::{build_conv_autoencoder, InitConfig};
use ringnet::optim::{train, LossKind, SgdConfig};
use ringnet::preprocess::{prepare, PreprocessPath};
use ringnet::synth::{generate_dataset, SynthConfig};

fn main() -> ringnet::Result<()> {
    let train_cfg = SynthConfig {
        counts_per_class: 120,
        seed: 41,
        ..SynthConfig::default()
    };
    let view_cfg = SynthConfig {
        counts_per_class: 2,
        seed: 42,
        ..SynthConfig::default()
    };
    let (train_grids, _) = generate_dataset(&train_cfg)?;
    let (view_grids, view_labels) = generate_dataset(&view_cfg)?;

    let train_pre = prepare(&train_grids, PreprocessPath::Unsupervised)?;
    let view_pre = prepare(&view_grids, PreprocessPath::Unsupervised)?;
    let inputs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();

    let mut model = build_conv_autoencoder(&InitConfig { seed: 43 })?;
    let cfg = SgdConfig {
        epochs: 25,
        seed: 44,
        ..SgdConfig::autoencoder()
    };
    let losses = train(&mut model, &inputs, None, LossKind::SumSquaredError, cfg)?;
    println!(
        "trained {} epochs, SSE {:.3} -> {:.3}",
        losses.len(),
        losses[0],
        losses.last().unwrap()
    );

    let mut panels = Vec::new();
    for (i, grid) in view_pre.iter().enumerate().take(4) {
        let recon = model.reconstruct(grid)?;
        let sse: f64 = recon
            .iter()
            .zip(grid.values())
            .map(|(r, t)| (r - t) * (r - t))
            .sum();
        println!("event {i} ({}): sse {sse:.3}", view_labels[i].name());
        panels.push(svg::ReconstructionPanel {
            original: grid.values().to_vec(),
            reconstruction: recon,
            caption: format!("event {i} ({}) sse {sse:.2}", view_labels[i].name()),
        });
    }

    std::fs::create_dir_all("examples-out")?;
    let path = std::path::Path::new("examples-out/reconstruct.svg");
    format::write_text(path, &svg::reconstruction_svg(&panels)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
