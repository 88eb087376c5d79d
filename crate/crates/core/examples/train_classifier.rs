//! Train the supervised classifier on a small synthetic split and report
//! test accuracy and per-class F1.

use ringnet::metrics::{confusion, f1_per_class, overall_accuracy};
use ringnet::models::{build_supervised_cnn, InitConfig};
use ringnet::optim::{LossKind, SgdConfig, Trainer};
use ringnet::preprocess::{prepare, PreprocessPath};
use ringnet::synth::{generate_dataset, EventLabel, SynthConfig};

fn main() -> ringnet::Result<()> {
    let train_cfg = SynthConfig {
        counts_per_class: 200,
        seed: 1,
        ..SynthConfig::default()
    };
    let test_cfg = SynthConfig {
        counts_per_class: 40,
        seed: 2,
        ..SynthConfig::default()
    };
    let (train_grids, train_labels) = generate_dataset(&train_cfg)?;
    let (test_grids, test_labels) = generate_dataset(&test_cfg)?;

    // classifier path: log-scale then center the brightest column
    let train_pre = prepare(&train_grids, PreprocessPath::Supervised)?;
    let test_pre = prepare(&test_grids, PreprocessPath::Supervised)?;
    let inputs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();

    let mut model = build_supervised_cnn(&InitConfig { seed: 3 })?;
    println!("supervised cnn: {} parameters", model.parameter_count());

    let cfg = SgdConfig {
        epochs: 20,
        seed: 4,
        ..SgdConfig::supervised()
    };
    let mut trainer = Trainer::new(&model, cfg)?;
    for epoch in 0..cfg.epochs {
        let loss = trainer.train_epoch(
            &mut model,
            &inputs,
            Some(&train_labels),
            LossKind::CrossEntropy,
        )?;
        println!(
            "epoch {:>2}/{}: mean cross-entropy {loss:.4}",
            epoch + 1,
            cfg.epochs
        );
    }

    let predictions: Vec<EventLabel> = test_pre
        .iter()
        .map(|g| model.predict(g).map(|(l, _)| l))
        .collect::<ringnet::Result<_>>()?;
    let cm = confusion(&test_labels, &predictions)?;
    println!("test accuracy: {:.3}", overall_accuracy(&cm)?);
    let f1 = f1_per_class(&cm)?;
    for &label in &EventLabel::ALL {
        println!("  {:<11} F1 {:.3}", label.name(), f1[label.index()]);
    }
    Ok(())
}
