//! Neural-network layers with exact analytic gradients.
//!
//! Four parameterized layer kinds (convolution, 2x2 max-pooling, fully
//! connected, transposed convolution) plus the two losses. Convolution and
//! transposed convolution are both lowered onto the im2col machinery in
//! [`crate::tensor`], so one well-tested kernel serves the forward pass,
//! the backward pass and the decoder upsampling path.
//!
//! Training uses `forward` (which stores the cache backward needs) followed
//! by `backward` (which consumes it). Inference uses `infer`, which leaves
//! the layer untouched and is safe to call concurrently on a shared layer.

mod conv;
mod dense;
mod loss;
mod pool;
mod tconv;

pub use loss::{cross_entropy_loss, softmax, sse_loss};

use crate::error::{Error, Result};
use crate::rng::Prng;
use crate::tensor::{conv_output_dims, Matrix, Tensor4};

/// Elementwise nonlinearity attached to a parameterized layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Tanh,
    Relu,
    /// Normalizes each example's outputs into a probability vector.
    /// Only legal on a dense layer; its backward pass expects the upstream
    /// gradient to already be taken with respect to the pre-softmax logits
    /// (which is exactly what [`cross_entropy_loss`] returns).
    Softmax,
}

impl Activation {
    /// Derivative of the activation expressed through its own output.
    #[inline]
    fn grad_factor(self, y: f64) -> f64 {
        match self {
            Activation::None => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            // handled by the caller: gradient passes through unchanged
            Activation::Softmax => 1.0,
        }
    }

    fn apply_elementwise(self, values: &mut [f64]) {
        match self {
            Activation::None => {}
            Activation::Tanh => {
                for v in values {
                    *v = v.tanh();
                }
            }
            Activation::Relu => {
                for v in values {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::Softmax => unreachable!("softmax is applied per example row"),
        }
    }
}

/// Static description of one layer: kind, geometry, activation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        pad: (usize, usize),
        activation: Activation,
    },
    /// 2x2 window, stride 2, channel-preserving. Partial trailing windows
    /// are truncated (floor semantics), so 3x11 pools to 1x5.
    MaxPool,
    Dense {
        in_units: usize,
        out_units: usize,
        activation: Activation,
    },
    /// Fractionally-strided (transposed) convolution: the adjoint of a
    /// strided convolution, used to upsample in the decoder.
    TransposedConv {
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                activation,
                ..
            } => {
                if in_channels == 0
                    || out_channels == 0
                    || kernel.0 == 0
                    || kernel.1 == 0
                    || stride.0 == 0
                    || stride.1 == 0
                {
                    return Err(Error::Config("conv dimensions must be >= 1".into()));
                }
                if activation == Activation::Softmax {
                    return Err(Error::Config(
                        "softmax is only legal on a dense layer".into(),
                    ));
                }
            }
            LayerSpec::MaxPool => {}
            LayerSpec::Dense {
                in_units,
                out_units,
                ..
            } => {
                if in_units == 0 || out_units == 0 {
                    return Err(Error::Config("dense unit counts must be >= 1".into()));
                }
            }
            LayerSpec::TransposedConv {
                in_channels,
                out_channels,
                kernel,
                stride,
                activation,
            } => {
                if in_channels == 0
                    || out_channels == 0
                    || kernel.0 == 0
                    || kernel.1 == 0
                    || stride == 0
                {
                    return Err(Error::Config(
                        "transposed-conv dimensions must be >= 1".into(),
                    ));
                }
                if activation == Activation::Softmax {
                    return Err(Error::Config(
                        "softmax is only legal on a dense layer".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Output (channels, height, width) for a given input extent.
    pub fn output_shape(&self, input: (usize, usize, usize)) -> Result<(usize, usize, usize)> {
        let (c, h, w) = input;
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                pad,
                ..
            } => {
                if c != in_channels {
                    return Err(Error::Shape(format!(
                        "conv expects {in_channels} input channels, got {c}"
                    )));
                }
                let (ho, wo) = conv_output_dims((h, w), kernel, stride, pad)?;
                Ok((out_channels, ho, wo))
            }
            LayerSpec::MaxPool => {
                if h < 2 || w < 2 {
                    return Err(Error::Shape(format!("cannot 2x2-pool a {h}x{w} input")));
                }
                Ok((c, (h - 2) / 2 + 1, (w - 2) / 2 + 1))
            }
            LayerSpec::Dense {
                in_units,
                out_units,
                ..
            } => {
                if c * h * w != in_units {
                    return Err(Error::Shape(format!(
                        "dense expects {in_units} inputs, got {c}x{h}x{w} = {}",
                        c * h * w
                    )));
                }
                Ok((out_units, 1, 1))
            }
            LayerSpec::TransposedConv {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if c != in_channels {
                    return Err(Error::Shape(format!(
                        "transposed conv expects {in_channels} input channels, got {c}"
                    )));
                }
                Ok((
                    out_channels,
                    (h - 1) * stride + kernel.0,
                    (w - 1) * stride + kernel.1,
                ))
            }
        }
    }

    pub fn weight_count(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            }
            | LayerSpec::TransposedConv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel.0 * kernel.1,
            LayerSpec::MaxPool => 0,
            LayerSpec::Dense {
                in_units,
                out_units,
                ..
            } => out_units * in_units,
        }
    }

    pub fn bias_count(&self) -> usize {
        match *self {
            LayerSpec::Conv { out_channels, .. }
            | LayerSpec::TransposedConv { out_channels, .. } => out_channels,
            LayerSpec::MaxPool => 0,
            LayerSpec::Dense { out_units, .. } => out_units,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    /// Fan-in/fan-out pair used by the fan-scaled uniform initializer.
    pub fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            }
            | LayerSpec::TransposedConv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (
                in_channels * kernel.0 * kernel.1,
                out_channels * kernel.0 * kernel.1,
            ),
            LayerSpec::MaxPool => (0, 0),
            LayerSpec::Dense {
                in_units,
                out_units,
                ..
            } => (in_units, out_units),
        }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Conv { activation, .. }
            | LayerSpec::Dense { activation, .. }
            | LayerSpec::TransposedConv { activation, .. } => activation,
            LayerSpec::MaxPool => Activation::None,
        }
    }
}

/// Forward-pass intermediates kept for the matching backward pass.
#[derive(Debug, Clone)]
enum Cache {
    Conv {
        input: Tensor4,
        output: Tensor4,
    },
    Pool {
        input_shape: (usize, usize, usize, usize),
        argmax: Vec<usize>,
        out_shape: (usize, usize, usize, usize),
    },
    Dense {
        input: Matrix,
        output: Matrix,
        input_shape: (usize, usize, usize, usize),
    },
    Tconv {
        input: Tensor4,
        output: Tensor4,
    },
}

/// Trainable parameters plus the forward cache.
///
/// Weight layout is row-major `(out_channels, in_channels, kh, kw)` for
/// both convolution kinds and row-major `(out_units, in_units)` for dense
/// layers. Biases have one entry per output channel or unit.
#[derive(Debug, Clone)]
pub struct LayerState {
    weights: Vec<f64>,
    bias: Vec<f64>,
    cache: Option<Cache>,
}

/// Gradients produced by one backward step.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    /// Gradient with respect to the layer input.
    pub input: Tensor4,
    /// Flat gradient matching the weight layout; empty for pooling.
    pub weights: Vec<f64>,
    /// One entry per bias; empty for pooling.
    pub bias: Vec<f64>,
}

/// A spec/state pair: one trainable building block of a model.
#[derive(Debug, Clone)]
pub struct Layer {
    spec: LayerSpec,
    state: LayerState,
}

impl Layer {
    /// Layer with zero-initialized parameters.
    pub fn new(spec: LayerSpec) -> Result<Layer> {
        spec.validate()?;
        let state = LayerState {
            weights: vec![0.0; spec.weight_count()],
            bias: vec![0.0; spec.bias_count()],
            cache: None,
        };
        Ok(Layer { spec, state })
    }

    /// Fan-scaled uniform init: weights from U(-a, a) with
    /// a = sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn init_weights(&mut self, prng: &mut Prng) {
        let (fan_in, fan_out) = self.spec.fans();
        if fan_in + fan_out == 0 {
            return;
        }
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in &mut self.state.weights {
            *w = prng.range(-a, a);
        }
        for b in &mut self.state.bias {
            *b = 0.0;
        }
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.state.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.state.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.state.bias
    }

    pub fn parameter_count(&self) -> usize {
        self.spec.parameter_count()
    }

    pub fn has_cache(&self) -> bool {
        self.state.cache.is_some()
    }

    pub fn clear_cache(&mut self) {
        self.state.cache = None;
    }

    /// Training-mode forward pass; stores the cache `backward` will need.
    pub fn forward(&mut self, x: &Tensor4) -> Result<Tensor4> {
        let (y, cache) = self.forward_impl(x, true)?;
        self.state.cache = cache;
        Ok(y)
    }

    /// Pure forward pass; does not touch the stored cache.
    pub fn infer(&self, x: &Tensor4) -> Result<Tensor4> {
        Ok(self.forward_impl(x, false)?.0)
    }

    fn forward_impl(&self, x: &Tensor4, want_cache: bool) -> Result<(Tensor4, Option<Cache>)> {
        match self.spec {
            LayerSpec::Conv { .. } => conv::forward(&self.spec, &self.state, x, want_cache),
            LayerSpec::MaxPool => pool::forward(x, want_cache),
            LayerSpec::Dense { .. } => dense::forward(&self.spec, &self.state, x, want_cache),
            LayerSpec::TransposedConv { .. } => {
                tconv::forward(&self.spec, &self.state, x, want_cache)
            }
        }
    }

    /// Backward pass. Consumes the cache stored by the last `forward`;
    /// calling it twice (or before any forward) is a state error.
    pub fn backward(&mut self, grad_y: &Tensor4) -> Result<LayerGrads> {
        let cache =
            self.state.cache.take().ok_or_else(|| {
                Error::State("backward called without a cached forward pass".into())
            })?;
        match (&self.spec, cache) {
            (LayerSpec::Conv { .. }, Cache::Conv { input, output }) => {
                conv::backward(&self.spec, &self.state, &input, &output, grad_y)
            }
            (
                LayerSpec::MaxPool,
                Cache::Pool {
                    input_shape,
                    argmax,
                    out_shape,
                },
            ) => pool::backward(input_shape, &argmax, out_shape, grad_y),
            (
                LayerSpec::Dense { .. },
                Cache::Dense {
                    input,
                    output,
                    input_shape,
                },
            ) => dense::backward(
                &self.spec,
                &self.state,
                &input,
                &output,
                input_shape,
                grad_y,
            ),
            (LayerSpec::TransposedConv { .. }, Cache::Tconv { input, output }) => {
                tconv::backward(&self.spec, &self.state, &input, &output, grad_y)
            }
            _ => Err(Error::State("cache does not match layer kind".into())),
        }
    }
}

/// View a (n, c, h, w) tensor as a channel-major matrix (c, n*h*w), the
/// layout the im2col GEMMs work in.
pub(crate) fn to_channel_major(t: &Tensor4) -> Matrix {
    let (n, c, h, w) = t.shape();
    let mut m = Matrix::zeros(c, n * h * w);
    for ci in 0..c {
        let row = m.row_mut(ci);
        for ni in 0..n {
            for i in 0..h {
                for j in 0..w {
                    row[(ni * h + i) * w + j] = t.at(ni, ci, i, j);
                }
            }
        }
    }
    m
}

/// Inverse of [`to_channel_major`].
pub(crate) fn from_channel_major(
    m: &Matrix,
    shape: (usize, usize, usize, usize),
) -> Result<Tensor4> {
    let (n, c, h, w) = shape;
    if m.rows != c || m.cols != n * h * w {
        return Err(Error::Shape(format!(
            "channel-major matrix {}x{} does not match shape ({n},{c},{h},{w})",
            m.rows, m.cols
        )));
    }
    let mut t = Tensor4::zeros(shape)?;
    for ci in 0..c {
        let row = m.row(ci);
        for ni in 0..n {
            for i in 0..h {
                for j in 0..w {
                    t.set(ni, ci, i, j, row[(ni * h + i) * w + j]);
                }
            }
        }
    }
    Ok(t)
}
