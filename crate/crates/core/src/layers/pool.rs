//! 2x2 max-pooling with stride 2.
//!
//! Ties go to the first occurrence in row-major scan order, which makes
//! the backward routing deterministic. Trailing rows/columns that do not
//! fill a window are truncated.

use super::{Cache, LayerGrads, Tensor4};
use crate::error::{Error, Result};

pub(super) fn forward(x: &Tensor4, want_cache: bool) -> Result<(Tensor4, Option<Cache>)> {
    let (n, c, h, w) = x.shape();
    if h < 2 || w < 2 {
        return Err(Error::Shape(format!("cannot 2x2-pool a {h}x{w} input")));
    }
    let hout = (h - 2) / 2 + 1;
    let wout = (w - 2) / 2 + 1;

    let mut y = Tensor4::zeros((n, c, hout, wout))?;
    let mut argmax = vec![0usize; n * c * hout * wout];
    for ni in 0..n {
        for ci in 0..c {
            for i in 0..hout {
                for j in 0..wout {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for u in 0..2 {
                        for v in 0..2 {
                            let val = x.at(ni, ci, 2 * i + u, 2 * j + v);
                            if val > best {
                                best = val;
                                best_idx = x.index(ni, ci, 2 * i + u, 2 * j + v);
                            }
                        }
                    }
                    let out_idx = y.index(ni, ci, i, j);
                    y.as_mut_slice()[out_idx] = best;
                    argmax[out_idx] = best_idx;
                }
            }
        }
    }
    let out_shape = y.shape();
    let cache = want_cache.then(|| Cache::Pool {
        input_shape: x.shape(),
        argmax,
        out_shape,
    });
    Ok((y, cache))
}

pub(super) fn backward(
    input_shape: (usize, usize, usize, usize),
    argmax: &[usize],
    out_shape: (usize, usize, usize, usize),
    grad_y: &Tensor4,
) -> Result<LayerGrads> {
    if grad_y.shape() != out_shape {
        return Err(Error::Shape(format!(
            "gradient shape {:?} does not match pooled output {:?}",
            grad_y.shape(),
            out_shape
        )));
    }
    let mut grad_input = Tensor4::zeros(input_shape)?;
    for (out_idx, &src_idx) in argmax.iter().enumerate() {
        grad_input.as_mut_slice()[src_idx] += grad_y.as_slice()[out_idx];
    }
    Ok(LayerGrads {
        input: grad_input,
        weights: Vec::new(),
        bias: Vec::new(),
    })
}
