//! The two reference architectures, assembled layer by layer and audited
//! at build time.
//!
//! Supervised CNN (input 1x8x24):
//!
//! ```text
//! conv 3x3 x71 tanh -> (71,6,22)   pool -> (71,3,11)
//! conv 2x2 x88 tanh -> (88,2,10)   pool -> (88,1,5)
//! fc 440 -> 26 tanh                fc 26 -> 5 softmax
//! ```
//!
//! Convolutional autoencoder (input 1x8x24):
//!
//! ```text
//! conv 5x5 x16 pad 2x2 relu -> (16,8,24)   pool -> (16,4,12)
//! conv 3x3 x16 pad 1x0 relu -> (16,4,10)   pool -> (16,2,5)
//! fc 160 -> 10 relu (the bottleneck code, reshaped to 10 channels at 1x1)
//! deconv 2x4 x16 stride 2 -> (16,2,4)
//! deconv 2x5 x16 stride 2 -> (16,4,11)
//! deconv 2x4 x1  stride 2 -> (1,8,24), linear output
//! ```
//!
//! Both chains are verified with a zeros forward pass when a model is
//! built, so a dimension regression cannot survive construction.

use crate::error::{Error, Result};
use crate::layers::{Activation, Layer, LayerSpec};
use crate::preprocess::PreprocessedGrid;
use crate::rng::Prng;
use crate::synth::EventLabel;
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    SupervisedCnn,
    ConvAutoencoder,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SupervisedCnn => "cnn",
            ModelKind::ConvAutoencoder => "cae",
        }
    }
}

/// Weight initialization: fan-in-scaled uniform U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)), biases zero.
#[derive(Debug, Clone, Copy)]
pub struct InitConfig {
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { seed: 1 }
    }
}

/// Ordered layer list with a fixed input extent.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    input_shape: (usize, usize, usize),
    layers: Vec<Layer>,
}

impl Model {
    /// Assemble a model and audit the whole shape chain with a zeros
    /// forward pass.
    pub fn from_layers(
        kind: ModelKind,
        input_shape: (usize, usize, usize),
        layers: Vec<Layer>,
    ) -> Result<Model> {
        if layers.is_empty() {
            return Err(Error::Build("a model needs at least one layer".into()));
        }
        let model = Model {
            kind,
            input_shape,
            layers,
        };
        let mut shape = input_shape;
        let mut static_chain = Vec::with_capacity(model.layers.len());
        for layer in &model.layers {
            shape = layer
                .spec()
                .output_shape(shape)
                .map_err(|e| Error::Build(e.message().to_string()))?;
            static_chain.push(shape);
        }
        let dynamic_chain = model.activation_shapes()?;
        if static_chain != dynamic_chain {
            return Err(Error::Build(format!(
                "static shape chain {static_chain:?} disagrees with forward pass {dynamic_chain:?}"
            )));
        }
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn layer_parameter_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::parameter_count).collect()
    }

    /// (channels, height, width) of every layer output, probed with zeros.
    pub fn activation_shapes(&self) -> Result<Vec<(usize, usize, usize)>> {
        let (c, h, w) = self.input_shape;
        let mut x = Tensor4::zeros((1, c, h, w))?;
        let mut shapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            x = layer.infer(&x)?;
            let (_, oc, oh, ow) = x.shape();
            shapes.push((oc, oh, ow));
        }
        Ok(shapes)
    }

    /// Pure forward pass returning every layer output; the caller owns the
    /// workspace, so concurrent calls on a shared model are safe.
    pub fn infer_all(&self, x: &Tensor4) -> Result<Vec<Tensor4>> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.infer(&cur)?;
            outputs.push(cur.clone());
        }
        Ok(outputs)
    }

    /// Pure forward pass returning only the final output.
    pub fn infer(&self, x: &Tensor4) -> Result<Tensor4> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.infer(&cur)?;
        }
        Ok(cur)
    }

    fn grid_input(&self, values: &[f64]) -> Result<Tensor4> {
        let (c, h, w) = self.input_shape;
        if values.len() != c * h * w {
            return Err(Error::Shape(format!(
                "model expects {} input values, got {}",
                c * h * w,
                values.len()
            )));
        }
        Tensor4::from_vec((1, c, h, w), values.to_vec())
    }

    /// Index of the layer whose output is the learned representation: the
    /// penultimate fully connected layer for the CNN, the bottleneck for
    /// the autoencoder.
    fn feature_layer(&self) -> Result<usize> {
        match self.kind {
            ModelKind::SupervisedCnn => {
                if self.layers.len() < 2 {
                    return Err(Error::Kind(
                        "classifier too small for feature extraction".into(),
                    ));
                }
                Ok(self.layers.len() - 2)
            }
            ModelKind::ConvAutoencoder => self
                .layers
                .iter()
                .position(|l| matches!(l.spec(), LayerSpec::Dense { .. }))
                .ok_or_else(|| Error::Kind("autoencoder has no bottleneck layer".into())),
        }
    }

    fn forward_to(&self, values: &[f64], layer_index: usize) -> Result<Tensor4> {
        let mut cur = self.grid_input(values)?;
        for layer in &self.layers[..=layer_index] {
            cur = layer.infer(&cur)?;
        }
        Ok(cur)
    }

    /// Classify one preprocessed (log-scaled, centered) grid.
    /// Returns the predicted label and the class probabilities; argmax
    /// ties break toward the lowest class index.
    pub fn predict(&self, grid: &PreprocessedGrid) -> Result<(EventLabel, Vec<f64>)> {
        if self.kind != ModelKind::SupervisedCnn {
            return Err(Error::Kind("predict needs a supervised classifier".into()));
        }
        let out = self.infer(&self.grid_input(grid.values())?)?;
        let probs = out.as_slice().to_vec();
        let mut best = 0usize;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok((EventLabel::from_index(best)?, probs))
    }

    /// The 26-dimensional tanh representation ahead of the softmax head.
    pub fn extract_features(&self, grid: &PreprocessedGrid) -> Result<Vec<f64>> {
        if self.kind != ModelKind::SupervisedCnn {
            return Err(Error::Kind(
                "extract_features needs a supervised classifier".into(),
            ));
        }
        let idx = self.feature_layer()?;
        Ok(self.forward_to(grid.values(), idx)?.into_vec())
    }

    /// The 10-dimensional ReLU bottleneck code (log-scaled input, not
    /// centered).
    pub fn encode(&self, grid: &PreprocessedGrid) -> Result<Vec<f64>> {
        if self.kind != ModelKind::ConvAutoencoder {
            return Err(Error::Kind("encode needs an autoencoder".into()));
        }
        let idx = self.feature_layer()?;
        Ok(self.forward_to(grid.values(), idx)?.into_vec())
    }

    /// Decode back to an 8x24 image (row-major, 192 values, linear output).
    pub fn reconstruct(&self, grid: &PreprocessedGrid) -> Result<Vec<f64>> {
        if self.kind != ModelKind::ConvAutoencoder {
            return Err(Error::Kind("reconstruct needs an autoencoder".into()));
        }
        Ok(self.infer(&self.grid_input(grid.values())?)?.into_vec())
    }
}

const CNN_CHAIN: [(usize, usize, usize); 6] = [
    (71, 6, 22),
    (71, 3, 11),
    (88, 2, 10),
    (88, 1, 5),
    (26, 1, 1),
    (5, 1, 1),
];

const CAE_CHAIN: [(usize, usize, usize); 8] = [
    (16, 8, 24),
    (16, 4, 12),
    (16, 4, 10),
    (16, 2, 5),
    (10, 1, 1),
    (16, 2, 4),
    (16, 4, 11),
    (1, 8, 24),
];

fn assemble(
    kind: ModelKind,
    specs: Vec<LayerSpec>,
    expected_chain: &[(usize, usize, usize)],
    init: &InitConfig,
) -> Result<Model> {
    let mut prng = Prng::new(init.seed);
    let mut layers = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut layer = Layer::new(spec).map_err(|e| Error::Build(e.message().to_string()))?;
        layer.init_weights(&mut prng);
        layers.push(layer);
    }
    let model = Model::from_layers(kind, (1, 8, 24), layers)?;
    let chain = model.activation_shapes()?;
    if chain != expected_chain {
        return Err(Error::Build(format!(
            "{} activation chain {chain:?} does not match the architecture table",
            kind.name()
        )));
    }
    Ok(model)
}

/// The six-layer supervised classifier. Valid (unpadded) convolutions:
/// that is the only reading under which the spatial chain ends at the
/// 1x5 footprint the first fully connected layer expects.
pub fn build_supervised_cnn(init: &InitConfig) -> Result<Model> {
    let specs = vec![
        LayerSpec::Conv {
            in_channels: 1,
            out_channels: 71,
            kernel: (3, 3),
            stride: (1, 1),
            pad: (0, 0),
            activation: Activation::Tanh,
        },
        LayerSpec::MaxPool,
        LayerSpec::Conv {
            in_channels: 71,
            out_channels: 88,
            kernel: (2, 2),
            stride: (1, 1),
            pad: (0, 0),
            activation: Activation::Tanh,
        },
        LayerSpec::MaxPool,
        LayerSpec::Dense {
            in_units: 440,
            out_units: 26,
            activation: Activation::Tanh,
        },
        LayerSpec::Dense {
            in_units: 26,
            out_units: 5,
            activation: Activation::Softmax,
        },
    ];
    assemble(ModelKind::SupervisedCnn, specs, &CNN_CHAIN, init)
}

/// The eight-layer convolutional autoencoder. The 10-unit bottleneck is
/// reshaped to 10 channels at 1x1 spatial extent, the only reading under
/// which three stride-2 transposed convolutions land exactly on 8x24.
pub fn build_conv_autoencoder(init: &InitConfig) -> Result<Model> {
    let specs = vec![
        LayerSpec::Conv {
            in_channels: 1,
            out_channels: 16,
            kernel: (5, 5),
            stride: (1, 1),
            pad: (2, 2),
            activation: Activation::Relu,
        },
        LayerSpec::MaxPool,
        LayerSpec::Conv {
            in_channels: 16,
            out_channels: 16,
            kernel: (3, 3),
            stride: (1, 1),
            pad: (1, 0),
            activation: Activation::Relu,
        },
        LayerSpec::MaxPool,
        LayerSpec::Dense {
            in_units: 160,
            out_units: 10,
            activation: Activation::Relu,
        },
        LayerSpec::TransposedConv {
            in_channels: 10,
            out_channels: 16,
            kernel: (2, 4),
            stride: 2,
            activation: Activation::None,
        },
        LayerSpec::TransposedConv {
            in_channels: 16,
            out_channels: 16,
            kernel: (2, 5),
            stride: 2,
            activation: Activation::None,
        },
        LayerSpec::TransposedConv {
            in_channels: 16,
            out_channels: 1,
            kernel: (2, 4),
            stride: 2,
            activation: Activation::None,
        },
    ];
    assemble(ModelKind::ConvAutoencoder, specs, &CAE_CHAIN, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{log_scale, prepare, PreprocessPath};
    use crate::synth::{generate_event, EventGrid, SynthConfig};

    #[test]
    fn cnn_activation_chain_matches_the_table() {
        let model = build_supervised_cnn(&InitConfig::default()).unwrap();
        assert_eq!(model.activation_shapes().unwrap(), CNN_CHAIN.to_vec());
    }

    #[test]
    fn cae_activation_chain_matches_the_table() {
        let model = build_conv_autoencoder(&InitConfig::default()).unwrap();
        assert_eq!(model.activation_shapes().unwrap(), CAE_CHAIN.to_vec());
    }

    #[test]
    fn parameter_counts_are_exact() {
        let cnn = build_supervised_cnn(&InitConfig::default()).unwrap();
        assert_eq!(
            cnn.layer_parameter_counts(),
            vec![710, 0, 25_080, 0, 11_466, 135]
        );
        let cae = build_conv_autoencoder(&InitConfig::default()).unwrap();
        assert_eq!(
            cae.layer_parameter_counts(),
            vec![416, 0, 2320, 0, 1610, 1296, 2576, 129]
        );
    }

    #[test]
    fn cnn_output_is_a_probability_vector() {
        let model = build_supervised_cnn(&InitConfig { seed: 5 }).unwrap();
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(2);
        for &label in &EventLabel::ALL {
            let grid = generate_event(label, &cfg, &mut prng).unwrap();
            let pre = prepare(&[grid], PreprocessPath::Supervised).unwrap();
            let (_, probs) = model.predict(&pre[0]).unwrap();
            assert_eq!(probs.len(), 5);
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn untrained_cnn_is_near_uniform_on_a_zero_grid() {
        // zero input, zero biases: every activation is zero, so the head
        // is exactly uniform; assert the sanity band around 0.2
        let model = build_supervised_cnn(&InitConfig { seed: 9 }).unwrap();
        let pre = log_scale(&EventGrid::zeros()).unwrap();
        let (_, probs) = model.predict(&pre).unwrap();
        for p in probs {
            assert!((p - 0.2).abs() < 0.1, "probability {p} strays from uniform");
        }
    }

    #[test]
    fn prediction_is_deterministic() {
        let model = build_supervised_cnn(&InitConfig { seed: 3 }).unwrap();
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(4);
        let grid = generate_event(EventLabel::Flasher, &cfg, &mut prng).unwrap();
        let pre = prepare(&[grid], PreprocessPath::Supervised).unwrap();
        let (l1, p1) = model.predict(&pre[0]).unwrap();
        let (l2, p2) = model.predict(&pre[0]).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn feature_vector_is_26_dimensional_tanh_output() {
        let model = build_supervised_cnn(&InitConfig { seed: 6 }).unwrap();
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(5);
        let grid = generate_event(EventLabel::Muon, &cfg, &mut prng).unwrap();
        let pre = prepare(&[grid], PreprocessPath::Supervised).unwrap();
        let f = model.extract_features(&pre[0]).unwrap();
        assert_eq!(f.len(), 26);
        assert!(f.iter().all(|v| v.abs() < 1.0));
        assert_eq!(f, model.extract_features(&pre[0]).unwrap());
    }

    #[test]
    fn bottleneck_code_is_10_dimensional_and_nonnegative() {
        let model = build_conv_autoencoder(&InitConfig { seed: 6 }).unwrap();
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(5);
        let grid = generate_event(EventLabel::IbdDelay, &cfg, &mut prng).unwrap();
        let pre = prepare(&[grid], PreprocessPath::Unsupervised).unwrap();
        let code = model.encode(&pre[0]).unwrap();
        assert_eq!(code.len(), 10);
        assert!(code.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn reconstruction_has_input_shape() {
        let model = build_conv_autoencoder(&InitConfig { seed: 2 }).unwrap();
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(6);
        let grid = generate_event(EventLabel::IbdPrompt, &cfg, &mut prng).unwrap();
        let pre = prepare(&[grid], PreprocessPath::Unsupervised).unwrap();
        let recon = model.reconstruct(&pre[0]).unwrap();
        assert_eq!(recon.len(), 192);
        assert!(recon.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn kind_mismatches_are_rejected() {
        let cnn = build_supervised_cnn(&InitConfig::default()).unwrap();
        let cae = build_conv_autoencoder(&InitConfig::default()).unwrap();
        let pre = log_scale(&EventGrid::zeros()).unwrap();
        assert!(matches!(cnn.encode(&pre), Err(Error::Kind(_))));
        assert!(matches!(cnn.reconstruct(&pre), Err(Error::Kind(_))));
        assert!(matches!(cae.predict(&pre), Err(Error::Kind(_))));
        assert!(matches!(cae.extract_features(&pre), Err(Error::Kind(_))));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = build_supervised_cnn(&InitConfig { seed: 11 }).unwrap();
        let b = build_supervised_cnn(&InitConfig { seed: 11 }).unwrap();
        let c = build_supervised_cnn(&InitConfig { seed: 12 }).unwrap();
        for (la, lb) in a.layers().iter().zip(b.layers()) {
            assert_eq!(la.weights(), lb.weights());
        }
        assert_ne!(a.layers()[0].weights(), c.layers()[0].weights());
    }
}
