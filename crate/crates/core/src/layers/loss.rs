//! Losses and the softmax map.

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Floor inside the cross-entropy log; keeps the loss finite when a
/// probability underflows to zero.
pub(crate) const CE_EPSILON: f64 = 1e-12;

/// Numerically safe softmax: subtracting the max makes the largest
/// exponent exp(0), so no input can overflow.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Cross-entropy of a softmax output against an integer label.
///
/// Returns the loss and the gradient with respect to the *pre-softmax
/// logits*, which collapses to `probs - onehot(label)`.
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= probs.len() {
        return Err(Error::Label(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let loss = -(probs[label] + CE_EPSILON).ln();
    let mut grad = probs.to_vec();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Sum of squared error over every element, with its gradient
/// `2 * (recon - target)`.
pub fn sse_loss(recon: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    if recon.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "reconstruction shape {:?} does not match target {:?}",
            recon.shape(),
            target.shape()
        )));
    }
    let mut loss = 0.0;
    let mut grad = Tensor4::zeros(recon.shape())?;
    for (g, (&r, &t)) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(recon.as_slice().iter().zip(target.as_slice()))
    {
        let d = r - t;
        loss += d * d;
        *g = 2.0 * d;
    }
    Ok((loss, grad))
}
