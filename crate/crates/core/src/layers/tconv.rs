//! Transposed (fractionally strided) convolution.
//!
//! The forward pass is the adjoint of a strided convolution, which is why
//! it upsamples: an input of spatial extent (h, w) maps to
//! ((h-1)*stride + kh, (w-1)*stride + kw). Weights are stored in the same
//! (out_channels, in_channels, kh, kw) layout as ordinary convolutions;
//! the matching convolution whose input-gradient this forward pass equals
//! is the one with the channel axes swapped.

use super::{
    from_channel_major, to_channel_major, Activation, Cache, LayerGrads, LayerSpec, LayerState,
};
use crate::error::{Error, Result};
use crate::tensor::{col2im, im2col, Matrix, Tensor4};

fn spec_fields(spec: &LayerSpec) -> (usize, usize, (usize, usize), usize, Activation) {
    match *spec {
        LayerSpec::TransposedConv {
            in_channels,
            out_channels,
            kernel,
            stride,
            activation,
        } => (in_channels, out_channels, kernel, stride, activation),
        _ => unreachable!("tconv routines called with a non-tconv spec"),
    }
}

/// Rearrange the stored (out_c, in_c, kh, kw) weights into the
/// (in_c, out_c*kh*kw) matrix the adjoint GEMM works with.
fn adjoint_weight_matrix(
    weights: &[f64],
    in_c: usize,
    out_c: usize,
    (kh, kw): (usize, usize),
) -> Matrix {
    let mut m = Matrix::zeros(in_c, out_c * kh * kw);
    for o in 0..out_c {
        for i in 0..in_c {
            for u in 0..kh {
                for v in 0..kw {
                    m.set(
                        i,
                        (o * kh + u) * kw + v,
                        weights[((o * in_c + i) * kh + u) * kw + v],
                    );
                }
            }
        }
    }
    m
}

pub(super) fn forward(
    spec: &LayerSpec,
    state: &LayerState,
    x: &Tensor4,
    want_cache: bool,
) -> Result<(Tensor4, Option<Cache>)> {
    let (in_c, out_c, kernel, stride, activation) = spec_fields(spec);
    let (n, c, h, w) = x.shape();
    if c != in_c {
        return Err(Error::Shape(format!(
            "transposed conv expects {in_c} input channels, got {c}"
        )));
    }
    let out_h = (h - 1) * stride + kernel.0;
    let out_w = (w - 1) * stride + kernel.1;

    let x_mat = to_channel_major(x);
    let wadj = adjoint_weight_matrix(&state.weights, in_c, out_c, kernel);
    let cols = wadj.matmul_transpose_lhs(&x_mat)?;
    let mut y = col2im(
        &cols,
        (n, out_c, out_h, out_w),
        kernel,
        (stride, stride),
        (0, 0),
    )?;

    for ni in 0..n {
        for o in 0..out_c {
            let b = state.bias[o];
            if b != 0.0 {
                for i in 0..out_h {
                    for j in 0..out_w {
                        let idx = y.index(ni, o, i, j);
                        y.as_mut_slice()[idx] += b;
                    }
                }
            }
        }
    }
    activation.apply_elementwise(y.as_mut_slice());

    let cache = want_cache.then(|| Cache::Tconv {
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
    let (in_c, out_c, kernel, stride, activation) = spec_fields(spec);
    if grad_y.shape() != output.shape() {
        return Err(Error::Shape(format!(
            "gradient shape {:?} does not match forward output {:?}",
            grad_y.shape(),
            output.shape()
        )));
    }
    let (n, _, out_h, out_w) = output.shape();

    let mut dz = grad_y.clone();
    for (d, &y) in dz.as_mut_slice().iter_mut().zip(output.as_slice()) {
        *d *= activation.grad_factor(y);
    }

    let mut grad_bias = vec![0.0; out_c];
    for ni in 0..n {
        for (o, gb) in grad_bias.iter_mut().enumerate() {
            for i in 0..out_h {
                for j in 0..out_w {
                    *gb += dz.at(ni, o, i, j);
                }
            }
        }
    }

    // adjoint of the forward scatter: gather patches from the output grad
    let gcols = im2col(&dz, kernel, (stride, stride), (0, 0))?;
    let wadj = adjoint_weight_matrix(&state.weights, in_c, out_c, kernel);
    let grad_x_mat = wadj.matmul(&gcols)?;
    let grad_input = from_channel_major(&grad_x_mat, input.shape())?;

    let x_mat = to_channel_major(input);
    let grad_wadj = x_mat.matmul_transpose_rhs(&gcols)?;
    let mut grad_weights = vec![0.0; state.weights.len()];
    let (kh, kw) = kernel;
    for o in 0..out_c {
        for i in 0..in_c {
            for u in 0..kh {
                for v in 0..kw {
                    grad_weights[((o * in_c + i) * kh + u) * kw + v] =
                        grad_wadj.at(i, (o * kh + u) * kw + v);
                }
            }
        }
    }

    Ok(LayerGrads {
        input: grad_input,
        weights: grad_weights,
        bias: grad_bias,
    })
}
