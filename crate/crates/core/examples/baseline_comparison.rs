//! Compare the classifier against the k-NN and linear SVM baselines on
//! one shared split.

use ringnet::baselines::{svm_train, KnnModel};
use ringnet::metrics::{confusion, macro_f1, overall_accuracy, ConfusionMatrix};
use ringnet::models::{build_supervised_cnn, InitConfig};
use ringnet::optim::{train, LossKind, SgdConfig};
use ringnet::preprocess::{prepare, PreprocessPath};
use ringnet::synth::{generate_dataset, EventLabel, SynthConfig};

fn main() -> ringnet::Result<()> {
    let train_cfg = SynthConfig {
        counts_per_class: 300,
        seed: 21,
        ..SynthConfig::default()
    };
    let test_cfg = SynthConfig {
        counts_per_class: 100,
        seed: 22,
        ..SynthConfig::default()
    };
    let (train_grids, train_labels) = generate_dataset(&train_cfg)?;
    let (test_grids, test_labels) = generate_dataset(&test_cfg)?;

    // all three classifiers consume the same preprocessed vectors
    let train_pre = prepare(&train_grids, PreprocessPath::Supervised)?;
    let test_pre = prepare(&test_grids, PreprocessPath::Supervised)?;
    let train_vecs: Vec<Vec<f64>> = train_pre.iter().map(|g| g.values().to_vec()).collect();
    let test_vecs: Vec<Vec<f64>> = test_pre.iter().map(|g| g.values().to_vec()).collect();

    let knn = KnnModel::fit(train_vecs.clone(), train_labels.clone(), 5)?;
    let knn_preds: Vec<EventLabel> = test_vecs
        .iter()
        .map(|v| knn.classify(v))
        .collect::<ringnet::Result<_>>()?;

    let svm = svm_train(&train_vecs, &train_labels, 1e-4, 30, 23)?;
    let svm_preds: Vec<EventLabel> = test_vecs
        .iter()
        .map(|v| svm.predict(v))
        .collect::<ringnet::Result<_>>()?;

    let mut cnn = build_supervised_cnn(&InitConfig { seed: 24 })?;
    let cfg = SgdConfig {
        epochs: 25,
        seed: 25,
        ..SgdConfig::supervised()
    };
    train(
        &mut cnn,
        &train_vecs,
        Some(&train_labels),
        LossKind::CrossEntropy,
        cfg,
    )?;
    let cnn_preds: Vec<EventLabel> = test_pre
        .iter()
        .map(|g| cnn.predict(g).map(|(l, _)| l))
        .collect::<ringnet::Result<_>>()?;

    let report: Vec<(&str, ConfusionMatrix)> = vec![
        ("knn", confusion(&test_labels, &knn_preds)?),
        ("svm", confusion(&test_labels, &svm_preds)?),
        ("cnn", confusion(&test_labels, &cnn_preds)?),
    ];
    println!("{:<6}{:>10}{:>10}", "method", "accuracy", "macro-F1");
    for (name, cm) in &report {
        println!(
            "{name:<6}{:>10.3}{:>10.3}",
            overall_accuracy(cm)?,
            macro_f1(cm)?
        );
    }
    Ok(())
}
