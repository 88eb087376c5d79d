//! Train the convolutional autoencoder and compare its held-out
//! reconstruction error against the constant mean-image predictor.

use ringnet::models::{build_conv_autoencoder, InitConfig};
use ringnet::optim::{LossKind, SgdConfig, Trainer};
use ringnet::preprocess::{prepare, PreprocessPath};
use ringnet::synth::{generate_dataset, SynthConfig};

fn main() -> ringnet::Result<()> {
    let train_cfg = SynthConfig {
        counts_per_class: 120,
        seed: 11,
        ..SynthConfig::default()
    };
    let test_cfg = SynthConfig {
        counts_per_class: 40,
        seed: 12,
        ..SynthConfig::default()
    };
    let (train_grids, _) = generate_dataset(&train_cfg)?;
    let (test_grids, _) = generate_dataset(&test_cfg)?;

    // autoencoder path: log-scale only, no centering
    let train_pre = prepare(&train_grids, PreprocessPath::Unsupervised)?;
    let test_pre = prepare(&test_grids, PreprocessPath::Unsupervised)?;
    let inputs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();

    // baseline: always predict the training-set mean image
    let mut mean = vec![0.0; 192];
    for v in &inputs {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= inputs.len() as f64;
    }
    let baseline_sse: f64 = test_pre
        .iter()
        .map(|g| {
            g.values()
                .iter()
                .zip(&mean)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
        })
        .sum();

    let mut model = build_conv_autoencoder(&InitConfig { seed: 13 })?;
    println!(
        "autoencoder: {} parameters, 10-unit bottleneck",
        model.parameter_count()
    );

    let cfg = SgdConfig {
        epochs: 25,
        seed: 14,
        ..SgdConfig::autoencoder()
    };
    let mut trainer = Trainer::new(&model, cfg)?;
    for epoch in 0..cfg.epochs {
        let loss = trainer.train_epoch(&mut model, &inputs, None, LossKind::SumSquaredError)?;
        if (epoch + 1) % 5 == 0 || epoch == 0 {
            println!("epoch {:>2}/{}: mean SSE {loss:.4}", epoch + 1, cfg.epochs);
        }
    }

    let model_sse: f64 = test_pre
        .iter()
        .map(|g| {
            let recon = model.reconstruct(g).unwrap();
            recon
                .iter()
                .zip(g.values())
                .map(|(r, t)| (r - t) * (r - t))
                .sum::<f64>()
        })
        .sum();
    println!(
        "held-out SSE: autoencoder {model_sse:.1} vs mean predictor {baseline_sse:.1} (ratio {:.3})",
        model_sse / baseline_sse
    );

    let code = model.encode(&test_pre[0])?;
    println!(
        "example bottleneck code: {:?}",
        code.iter()
            .map(|v| (v * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    Ok(())
}
