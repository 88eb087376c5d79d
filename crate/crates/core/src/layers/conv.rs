//! Convolution via im2col + GEMM.
//!
//! "Convolution" here means cross-correlation (no kernel flip), the
//! universal CNN convention:
//!
//! ```text
//! y[n,f,i,j] = act( b[f] + sum over c,u,v of w[f,c,u,v] * xpad[n,c,i*sh+u,j*sw+v] )
//! ```

use super::{to_channel_major, Activation, Cache, LayerGrads, LayerSpec, LayerState};
use crate::error::{Error, Result};
use crate::tensor::{col2im, conv_output_dims, im2col, Matrix, Tensor4};

type ConvFields = (
    usize,
    usize,
    (usize, usize),
    (usize, usize),
    (usize, usize),
    Activation,
);

fn spec_fields(spec: &LayerSpec) -> ConvFields {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
            activation,
        } => (in_channels, out_channels, kernel, stride, pad, activation),
        _ => unreachable!("conv routines called with a non-conv spec"),
    }
}

pub(super) fn forward(
    spec: &LayerSpec,
    state: &LayerState,
    x: &Tensor4,
    want_cache: bool,
) -> Result<(Tensor4, Option<Cache>)> {
    let (in_c, out_c, kernel, stride, pad, activation) = spec_fields(spec);
    let (n, c, h, w) = x.shape();
    if c != in_c {
        return Err(Error::Shape(format!(
            "conv expects {in_c} input channels, got {c}"
        )));
    }
    let (hout, wout) = conv_output_dims((h, w), kernel, stride, pad)?;

    let cols = im2col(x, kernel, stride, pad)?;
    let wmat = Matrix::from_vec(out_c, in_c * kernel.0 * kernel.1, state.weights.clone())?;
    let y_mat = wmat.matmul(&cols)?;

    let mut y = Tensor4::zeros((n, out_c, hout, wout))?;
    for f in 0..out_c {
        let row = y_mat.row(f);
        let b = state.bias[f];
        for ni in 0..n {
            for i in 0..hout {
                for j in 0..wout {
                    y.set(ni, f, i, j, row[(ni * hout + i) * wout + j] + b);
                }
            }
        }
    }
    activation.apply_elementwise(y.as_mut_slice());

    let cache = want_cache.then(|| Cache::Conv {
        input: x.clone(),
        output: y.clone(),
    });
    Ok((y, cache))
}

pub(super) fn backward(
    spec: &LayerSpec,
    state: &LayerState,
    input: &Tensor4,
    output: &Tensor4,
    grad_y: &Tensor4,
) -> Result<LayerGrads> {
    let (in_c, out_c, kernel, stride, pad, activation) = spec_fields(spec);
    if grad_y.shape() != output.shape() {
        return Err(Error::Shape(format!(
            "gradient shape {:?} does not match forward output {:?}",
            grad_y.shape(),
            output.shape()
        )));
    }
    let (n, _, hout, wout) = output.shape();

    // chain through the activation
    let mut dz = grad_y.clone();
    for (d, &y) in dz.as_mut_slice().iter_mut().zip(output.as_slice()) {
        *d *= activation.grad_factor(y);
    }

    let mut grad_bias = vec![0.0; out_c];
    for ni in 0..n {
        for (f, gb) in grad_bias.iter_mut().enumerate() {
            for i in 0..hout {
                for j in 0..wout {
                    *gb += dz.at(ni, f, i, j);
                }
            }
        }
    }

    let dz_mat = to_channel_major(&dz);
    let cols = im2col(input, kernel, stride, pad)?;
    let grad_weights = dz_mat.matmul_transpose_rhs(&cols)?.into_vec();

    let wmat = Matrix::from_vec(out_c, in_c * kernel.0 * kernel.1, state.weights.clone())?;
    let grad_cols = wmat.matmul_transpose_lhs(&dz_mat)?;
    let grad_input = col2im(&grad_cols, input.shape(), kernel, stride, pad)?;

    Ok(LayerGrads {
        input: grad_input,
        weights: grad_weights,
        bias: grad_bias,
    })
}
