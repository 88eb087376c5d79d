//! From-scratch deep-learning engine and analysis pipeline for cylindrical
//! photomultiplier event images.
//!
//! The detector surface is an unwrapped cylinder: 8 rings of 24
//! photomultiplier tubes, giving one 8x24 charge image per triggered
//! event. This crate contains everything needed to study such images end
//! to end, with no numeric dependencies:
//!
//! - [`synth`]: a labeled synthetic generator for the five event classes
//!   (muon, flasher, IBD prompt, IBD delay, other)
//! - [`preprocess`]: log-scaling into [0, 1] and cyclic column centering
//! - [`tensor`] + [`layers`]: im2col-based convolution, max-pooling, dense
//!   and transposed-convolution layers with exact analytic gradients
//! - [`optim`]: SGD with classical momentum, deterministic per seed
//! - [`models`]: the five-class supervised CNN and the 10-unit-bottleneck
//!   convolutional autoencoder, audited against their architecture tables
//! - [`baselines`]: k-NN and linear one-vs-rest SVM comparison classifiers
//! - [`metrics`]: confusion matrix, per-class F1 and accuracy
//! - [`tsne`]: exact t-SNE with perplexity calibration, for feature maps
//! - [`cli`]: the `ringnet` binary plus the dataset/model file formats and
//!   SVG plot emitters
//! - [`gradcheck`]: finite-difference oracles used by the test suites
//!
//! The `examples/` directory has one runnable walkthrough per capability;
//! `cargo run --release -- help` documents the CLI.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod tsne;

pub use error::{Error, Result};
pub use layers::{Activation, Layer, LayerGrads, LayerSpec};
pub use models::{build_conv_autoencoder, build_supervised_cnn, InitConfig, Model, ModelKind};
pub use optim::{sgd_step, train, LossKind, SgdConfig, Trainer};
pub use preprocess::{center_columns, log_scale, prepare, PreprocessPath, PreprocessedGrid};
pub use rng::Prng;
pub use synth::{generate_dataset, generate_event, EventGrid, EventLabel, SynthConfig};
pub use tensor::{col2im, im2col, Matrix, Tensor4};
pub use tsne::{
    conditional_affinities, kl_divergence, tsne_embed, AffinityMatrix, Embedding, TsneConfig,
};
