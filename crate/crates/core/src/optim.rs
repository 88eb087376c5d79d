//! SGD with classical momentum and the mini-batch training loop shared by
//! the classifier and the autoencoder.
//!
//! The update is heavy-ball momentum:
//!
//! ```text
//! v <- mu * v - eta * g;    p <- p + v
//! ```
//!
//! Batch gradients are means over the batch, which decouples the learning
//! rate from the batch size. Training is sequential over batches and fully
//! determined by (seed, data, config).

use crate::error::{Error, Result};
use crate::layers::{cross_entropy_loss, sse_loss, Activation, LayerSpec};
use crate::models::Model;
use crate::rng::Prng;
use crate::synth::EventLabel;
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl SgdConfig {
    /// Classifier defaults: lr 0.01, momentum 0.9, batch 64.
    pub fn supervised() -> SgdConfig {
        SgdConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 30,
            seed: 7,
        }
    }

    /// Autoencoder defaults: lr 0.0005, momentum 0.9, batch 64.
    pub fn autoencoder() -> SgdConfig {
        SgdConfig {
            learning_rate: 0.0005,
            momentum: 0.9,
            batch_size: 64,
            epochs: 40,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// One momentum step on a flat parameter slice.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    cfg: &SgdConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::Shape(format!(
            "sgd_step lengths differ: params {}, grads {}, velocity {}",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = cfg.momentum * *v - cfg.learning_rate * g;
        *p += *v;
    }
    Ok(())
}

/// Which loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Softmax cross-entropy against integer labels.
    CrossEntropy,
    /// Sum of squared error against the input itself (reconstruction).
    SumSquaredError,
}

/// Momentum buffers (one per parameter tensor) plus the shuffling stream.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: SgdConfig,
    velocity: Vec<(Vec<f64>, Vec<f64>)>,
    prng: Prng,
}

impl Trainer {
    pub fn new(model: &Model, cfg: SgdConfig) -> Result<Trainer> {
        cfg.validate()?;
        let velocity = model
            .layers()
            .iter()
            .map(|l| (vec![0.0; l.weights().len()], vec![0.0; l.bias().len()]))
            .collect();
        Ok(Trainer {
            cfg,
            velocity,
            prng: Prng::new(cfg.seed),
        })
    }

    pub fn config(&self) -> &SgdConfig {
        &self.cfg
    }

    /// One pass over the dataset: shuffle, split into batches (the last
    /// may be short), one momentum step per batch on batch-mean gradients.
    /// Returns the mean per-example loss observed during the pass.
    ///
    /// `inputs` are flat grids matching the model input extent; `labels`
    /// are required for cross-entropy and ignored for reconstruction.
    pub fn train_epoch(
        &mut self,
        model: &mut Model,
        inputs: &[Vec<f64>],
        labels: Option<&[EventLabel]>,
        loss: LossKind,
    ) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::Data("cannot train on an empty dataset".into()));
        }
        let (c, h, w) = model.input_shape();
        let width = c * h * w;
        if let Some(bad) = inputs.iter().find(|v| v.len() != width) {
            return Err(Error::Shape(format!(
                "input has {} values, model expects {width}",
                bad.len()
            )));
        }
        let labels = match loss {
            LossKind::CrossEntropy => {
                let labels = labels
                    .ok_or_else(|| Error::Kind("cross-entropy training needs labels".into()))?;
                if labels.len() != inputs.len() {
                    return Err(Error::Data(format!(
                        "{} labels for {} inputs",
                        labels.len(),
                        inputs.len()
                    )));
                }
                let last = model.layers().last().expect("audited model has layers");
                let softmax_head = matches!(
                    last.spec(),
                    LayerSpec::Dense {
                        activation: Activation::Softmax,
                        ..
                    }
                );
                if !softmax_head {
                    return Err(Error::Kind(
                        "cross-entropy training needs a softmax output layer".into(),
                    ));
                }
                Some(labels)
            }
            LossKind::SumSquaredError => {
                // a softmax head's backward pass expects logit gradients,
                // which a reconstruction loss does not produce
                let last = model.layers().last().expect("audited model has layers");
                if last.spec().activation() == Activation::Softmax {
                    return Err(Error::Kind(
                        "reconstruction training cannot drive a softmax output layer".into(),
                    ));
                }
                None
            }
        };

        let mut order: Vec<usize> = (0..inputs.len()).collect();
        self.prng.shuffle(&mut order);

        let mut total_loss = 0.0;
        for batch in order.chunks(self.cfg.batch_size) {
            total_loss += self.train_batch(model, inputs, labels, loss, batch)?;
        }
        Ok(total_loss / inputs.len() as f64)
    }

    fn train_batch(
        &mut self,
        model: &mut Model,
        inputs: &[Vec<f64>],
        labels: Option<&[EventLabel]>,
        loss: LossKind,
        batch: &[usize],
    ) -> Result<f64> {
        let (c, h, w) = model.input_shape();
        let width = c * h * w;
        let b = batch.len();

        let mut data = Vec::with_capacity(b * width);
        for &i in batch {
            data.extend_from_slice(&inputs[i]);
        }
        let x = Tensor4::from_vec((b, c, h, w), data)?;

        // forward with caches
        let mut cur = x.clone();
        for layer in model.layers_mut() {
            cur = layer.forward(&cur)?;
        }

        // loss and its gradient, scaled by 1/b so the step uses batch means
        let (batch_loss, mut grad) = match loss {
            LossKind::CrossEntropy => {
                let labels = labels.expect("checked in train_epoch");
                let (_, classes, _, _) = cur.shape();
                let mut total = 0.0;
                let mut grad = Tensor4::zeros(cur.shape())?;
                for (row, &i) in batch.iter().enumerate() {
                    let probs = &cur.as_slice()[row * classes..(row + 1) * classes];
                    let (l, g) = cross_entropy_loss(probs, labels[i].index())?;
                    total += l;
                    for (k, gv) in g.iter().enumerate() {
                        grad.as_mut_slice()[row * classes + k] = gv / b as f64;
                    }
                }
                (total, grad)
            }
            LossKind::SumSquaredError => {
                let (total, mut grad) = sse_loss(&cur, &x)?;
                for g in grad.as_mut_slice() {
                    *g /= b as f64;
                }
                (total, grad)
            }
        };

        // backward in reverse order, stepping each layer as its gradients
        // become available
        for (idx, layer) in model.layers_mut().iter_mut().enumerate().rev() {
            let grads = layer.backward(&grad)?;
            grad = grads.input;
            let (vw, vb) = &mut self.velocity[idx];
            if !grads.weights.is_empty() {
                sgd_step(layer.weights_mut(), &grads.weights, vw, &self.cfg)?;
            }
            if !grads.bias.is_empty() {
                sgd_step(layer.bias_mut(), &grads.bias, vb, &self.cfg)?;
            }
        }

        Ok(batch_loss)
    }
}

/// Run `cfg.epochs` epochs and return the per-epoch mean losses.
pub fn train(
    model: &mut Model,
    inputs: &[Vec<f64>],
    labels: Option<&[EventLabel]>,
    loss: LossKind,
    cfg: SgdConfig,
) -> Result<Vec<f64>> {
    let mut trainer = Trainer::new(model, cfg)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        trace.push(trainer.train_epoch(model, inputs, labels, loss)?);
    }
    Ok(trace)
}
