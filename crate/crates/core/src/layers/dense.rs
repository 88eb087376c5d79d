//! Fully connected layer: y = act(W x + b) on flattened inputs.

use super::{Activation, Cache, LayerGrads, LayerSpec, LayerState};
use crate::error::{Error, Result};
use crate::layers::loss::softmax_in_place;
use crate::tensor::{Matrix, Tensor4};

fn spec_fields(spec: &LayerSpec) -> (usize, usize, Activation) {
    match *spec {
        LayerSpec::Dense {
            in_units,
            out_units,
            activation,
        } => (in_units, out_units, activation),
        _ => unreachable!("dense routines called with a non-dense spec"),
    }
}

pub(super) fn forward(
    spec: &LayerSpec,
    state: &LayerState,
    x: &Tensor4,
    want_cache: bool,
) -> Result<(Tensor4, Option<Cache>)> {
    let (in_units, out_units, activation) = spec_fields(spec);
    let (n, c, h, w) = x.shape();
    if c * h * w != in_units {
        return Err(Error::Shape(format!(
            "dense expects {in_units} inputs, got {c}x{h}x{w} = {}",
            c * h * w
        )));
    }

    // flatten: row per example
    let x_mat = Matrix::from_vec(n, in_units, x.as_slice().to_vec())?;
    let wmat = Matrix::from_vec(out_units, in_units, state.weights.clone())?;
    let mut y_mat = x_mat.matmul_transpose_rhs(&wmat)?;
    for r in 0..n {
        let row = y_mat.row_mut(r);
        for (v, b) in row.iter_mut().zip(&state.bias) {
            *v += b;
        }
        match activation {
            Activation::Softmax => softmax_in_place(row),
            act => act.apply_elementwise(row),
        }
    }

    let y = Tensor4::from_vec((n, out_units, 1, 1), y_mat.as_slice().to_vec())?;
    let cache = want_cache.then(|| Cache::Dense {
        input: x_mat,
        output: y_mat,
        input_shape: x.shape(),
    });
    Ok((y, cache))
}

pub(super) fn backward(
    spec: &LayerSpec,
    state: &LayerState,
    input: &Matrix,
    output: &Matrix,
    input_shape: (usize, usize, usize, usize),
    grad_y: &Tensor4,
) -> Result<LayerGrads> {
    let (in_units, out_units, activation) = spec_fields(spec);
    let n = input.rows;
    if grad_y.shape() != (n, out_units, 1, 1) {
        return Err(Error::Shape(format!(
            "gradient shape {:?} does not match dense output ({n},{out_units},1,1)",
            grad_y.shape()
        )));
    }

    // For Softmax the upstream gradient is already with respect to the
    // logits (see cross_entropy_loss), so it passes through unchanged.
    let mut dz = Matrix::from_vec(n, out_units, grad_y.as_slice().to_vec())?;
    if activation != Activation::Softmax {
        for (d, &y) in dz.as_mut_slice().iter_mut().zip(output.as_slice()) {
            *d *= activation.grad_factor(y);
        }
    }

    let grad_weights = dz.matmul_transpose_lhs(input)?.into_vec();

    let mut grad_bias = vec![0.0; out_units];
    for r in 0..n {
        for (gb, &d) in grad_bias.iter_mut().zip(dz.row(r)) {
            *gb += d;
        }
    }

    let wmat = Matrix::from_vec(out_units, in_units, state.weights.clone())?;
    let grad_x = dz.matmul(&wmat)?;
    let grad_input = Tensor4::from_vec(input_shape, grad_x.into_vec())?;

    Ok(LayerGrads {
        input: grad_input,
        weights: grad_weights,
        bias: grad_bias,
    })
}

#[cfg(test)]
mod tests {
    use crate::layers::{Activation, Layer, LayerSpec};
    use crate::tensor::Tensor4;

    fn dense_layer(in_units: usize, out_units: usize, activation: Activation) -> Layer {
        Layer::new(LayerSpec::Dense {
            in_units,
            out_units,
            activation,
        })
        .unwrap()
    }

    #[test]
    fn identity_weights_pass_input_through() {
        let mut layer = dense_layer(3, 3, Activation::None);
        for i in 0..3 {
            layer.weights_mut()[i * 3 + i] = 1.0;
        }
        let x = Tensor4::from_vec((2, 3, 1, 1), vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.5]).unwrap();
        let y = layer.infer(&x).unwrap();
        assert_eq!(y.as_slice(), x.as_slice());
    }

    #[test]
    fn flattens_spatial_inputs() {
        // 440 = 88 channels x 1 x 5, the footprint ahead of a 26-unit layer
        let layer = dense_layer(440, 26, Activation::Tanh);
        let x = Tensor4::zeros((2, 88, 1, 5)).unwrap();
        let y = layer.infer(&x).unwrap();
        assert_eq!(y.shape(), (2, 26, 1, 1));
    }

    #[test]
    fn wrong_input_width_is_a_shape_error() {
        let layer = dense_layer(4, 2, Activation::None);
        let x = Tensor4::zeros((1, 3, 1, 1)).unwrap();
        assert!(layer.infer(&x).is_err());
    }

    #[test]
    fn hand_checked_affine_backward() {
        // y = Wx + b with W = [[1, 2], [3, 4]], x = [1, 1], upstream grad [1, 0]
        let mut layer = dense_layer(2, 2, Activation::None);
        layer.weights_mut().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let x = Tensor4::from_vec((1, 2, 1, 1), vec![1.0, 1.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 7.0]);

        let g = Tensor4::from_vec((1, 2, 1, 1), vec![1.0, 0.0]).unwrap();
        let grads = layer.backward(&g).unwrap();
        assert_eq!(grads.weights, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(grads.bias, vec![1.0, 0.0]);
        assert_eq!(grads.input.as_slice(), &[1.0, 2.0]);
    }
}
