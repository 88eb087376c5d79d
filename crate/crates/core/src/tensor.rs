//! Dense numeric arrays and the im2col/col2im lowering that convolution,
//! its gradients and transposed convolution are all built on.
//!
//! Everything is 64-bit floating point: the finite-difference gradient
//! checks in the layer tests need double precision, and the problem sizes
//! here are small enough that memory never matters.

use crate::error::{Error, Result};

/// Batch-channel-height-width tensor, row-major in (n, c, h, w) order.
///
/// Element (n, c, i, j) lives at flat index `((n*C + c)*H + i)*W + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: (usize, usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor4 {
    /// Tensor with every element equal to `value`.
    pub fn filled(shape: (usize, usize, usize, usize), value: f64) -> Result<Tensor4> {
        let (n, c, h, w) = shape;
        if n == 0 || c == 0 || h == 0 || w == 0 {
            return Err(Error::Shape(format!(
                "tensor dimensions must all be >= 1, got ({n},{c},{h},{w})"
            )));
        }
        Ok(Tensor4 {
            shape,
            data: vec![value; n * c * h * w],
        })
    }

    pub fn zeros(shape: (usize, usize, usize, usize)) -> Result<Tensor4> {
        Tensor4::filled(shape, 0.0)
    }

    pub fn from_vec(shape: (usize, usize, usize, usize), data: Vec<f64>) -> Result<Tensor4> {
        let (n, c, h, w) = shape;
        if n == 0 || c == 0 || h == 0 || w == 0 {
            return Err(Error::Shape(format!(
                "tensor dimensions must all be >= 1, got ({n},{c},{h},{w})"
            )));
        }
        if data.len() != n * c * h * w {
            return Err(Error::Shape(format!(
                "data length {} does not match shape ({n},{c},{h},{w})",
                data.len()
            )));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, i: usize, j: usize) -> usize {
        let (_, ch, h, w) = self.shape;
        ((n * ch + c) * h + i) * w + j
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, i: usize, j: usize) -> f64 {
        self.data[self.index(n, c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, i: usize, j: usize, value: f64) {
        let idx = self.index(n, c, i, j);
        self.data[idx] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Same data reinterpreted under a new shape of equal element count.
    pub fn reshape(&self, shape: (usize, usize, usize, usize)) -> Result<Tensor4> {
        Tensor4::from_vec(shape, self.data.clone())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Flat row-major matrix; the im2col workspace and the weight store for
/// fully connected layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`; both operands are walked along contiguous rows.
    pub fn matmul_transpose_rhs(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "matmul_transpose_rhs {}x{} by {}x{}^T",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                let b_row = other.row(j);
                let dot: f64 = a_row.iter().zip(b_row).map(|(a, b)| a * b).sum();
                out.set(i, j, dot);
            }
        }
        Ok(out)
    }

    /// `self^T * other`.
    pub fn matmul_transpose_lhs(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "matmul_transpose_lhs {}x{}^T by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (r, &a) in a_row.iter().enumerate() {
                let out_row = out.row_mut(r);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

/// Output spatial extent of a convolution; errors unless the window tiling
/// comes out exact (`(dim + 2*pad - kernel)` nonnegative and divisible by
/// the stride).
pub fn conv_output_dims(
    (h, w): (usize, usize),
    (kh, kw): (usize, usize),
    (sh, sw): (usize, usize),
    (ph, pw): (usize, usize),
) -> Result<(usize, usize)> {
    if kh == 0 || kw == 0 || sh == 0 || sw == 0 {
        return Err(Error::Shape("kernel and stride must be >= 1".into()));
    }
    let h_span = h + 2 * ph;
    let w_span = w + 2 * pw;
    if h_span < kh || w_span < kw {
        return Err(Error::Shape(format!(
            "kernel {kh}x{kw} larger than padded input {h_span}x{w_span}"
        )));
    }
    if (h_span - kh) % sh != 0 || (w_span - kw) % sw != 0 {
        return Err(Error::Shape(format!(
            "stride ({sh},{sw}) does not tile padded input {h_span}x{w_span} with kernel {kh}x{kw}"
        )));
    }
    Ok(((h_span - kh) / sh + 1, (w_span - kw) / sw + 1))
}

/// Lower a tensor into patch columns.
///
/// The result has shape `(c*kh*kw, n*hout*wout)`; column `(n, i, j)` (in
/// that row-major order) holds the receptive field of output position
/// `(i, j)` of example `n`, with zeros where the field reaches into padding.
pub fn im2col(
    x: &Tensor4,
    kernel: (usize, usize),
    stride: (usize, usize),
    pad: (usize, usize),
) -> Result<Matrix> {
    let (n, c, h, w) = x.shape();
    let (kh, kw) = kernel;
    let (sh, sw) = stride;
    let (ph, pw) = pad;
    let (hout, wout) = conv_output_dims((h, w), kernel, stride, pad)?;

    let mut out = Matrix::zeros(c * kh * kw, n * hout * wout);
    for ci in 0..c {
        for u in 0..kh {
            for v in 0..kw {
                let row = (ci * kh + u) * kw + v;
                let out_row = out.row_mut(row);
                for ni in 0..n {
                    for i in 0..hout {
                        let src_i = (i * sh + u) as isize - ph as isize;
                        for j in 0..wout {
                            let src_j = (j * sw + v) as isize - pw as isize;
                            let col = (ni * hout + i) * wout + j;
                            if src_i >= 0
                                && (src_i as usize) < h
                                && src_j >= 0
                                && (src_j as usize) < w
                            {
                                out_row[col] = x.at(ni, ci, src_i as usize, src_j as usize);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`im2col`]: scatter patch columns back into a tensor, summing
/// overlapping contributions. This is not an inverse; applied after
/// `im2col` it counts receptive-field multiplicity.
pub fn col2im(
    m: &Matrix,
    x_shape: (usize, usize, usize, usize),
    kernel: (usize, usize),
    stride: (usize, usize),
    pad: (usize, usize),
) -> Result<Tensor4> {
    let (n, c, h, w) = x_shape;
    let (kh, kw) = kernel;
    let (sh, sw) = stride;
    let (ph, pw) = pad;
    let (hout, wout) = conv_output_dims((h, w), kernel, stride, pad)?;
    if m.rows != c * kh * kw || m.cols != n * hout * wout {
        return Err(Error::Shape(format!(
            "col matrix is {}x{}, expected {}x{} for target shape ({n},{c},{h},{w})",
            m.rows,
            m.cols,
            c * kh * kw,
            n * hout * wout
        )));
    }

    let mut out = Tensor4::zeros(x_shape)?;
    for ci in 0..c {
        for u in 0..kh {
            for v in 0..kw {
                let row = (ci * kh + u) * kw + v;
                let m_row = m.row(row);
                for ni in 0..n {
                    for i in 0..hout {
                        let dst_i = (i * sh + u) as isize - ph as isize;
                        if dst_i < 0 || dst_i as usize >= h {
                            continue;
                        }
                        for j in 0..wout {
                            let dst_j = (j * sw + v) as isize - pw as isize;
                            if dst_j < 0 || dst_j as usize >= w {
                                continue;
                            }
                            let col = (ni * hout + i) * wout + j;
                            let idx = out.index(ni, ci, dst_i as usize, dst_j as usize);
                            out.as_mut_slice()[idx] += m_row[col];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn random_tensor(shape: (usize, usize, usize, usize), prng: &mut Prng) -> Tensor4 {
        let count = shape.0 * shape.1 * shape.2 * shape.3;
        let data: Vec<f64> = (0..count).map(|_| prng.range(-1.0, 1.0)).collect();
        Tensor4::from_vec(shape, data).unwrap()
    }

    /// Patch extraction the slow, obviously-correct way: walk every output
    /// position and copy its receptive field element by element.
    fn im2col_loop_oracle(
        x: &Tensor4,
        (kh, kw): (usize, usize),
        (sh, sw): (usize, usize),
        (ph, pw): (usize, usize),
    ) -> Matrix {
        let (n, c, h, w) = x.shape();
        let (hout, wout) = conv_output_dims((h, w), (kh, kw), (sh, sw), (ph, pw)).unwrap();
        let mut out = Matrix::zeros(c * kh * kw, n * hout * wout);
        for ni in 0..n {
            for i in 0..hout {
                for j in 0..wout {
                    let col = (ni * hout + i) * wout + j;
                    for ci in 0..c {
                        for u in 0..kh {
                            for v in 0..kw {
                                let row = (ci * kh + u) * kw + v;
                                let si = (i * sh + u) as isize - ph as isize;
                                let sj = (j * sw + v) as isize - pw as isize;
                                let val =
                                    if si >= 0 && (si as usize) < h && sj >= 0 && (sj as usize) < w
                                    {
                                        x.at(ni, ci, si as usize, sj as usize)
                                    } else {
                                        0.0
                                    };
                                out.set(row, col, val);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn filled_produces_uniform_values() {
        let t = Tensor4::filled((1, 1, 2, 2), 0.0).unwrap();
        assert_eq!(t.as_slice(), &[0.0; 4]);

        let t = Tensor4::filled((2, 3, 8, 24), 1.0).unwrap();
        assert_eq!(t.len(), 1152);
        assert!(t.as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(t.shape(), (2, 3, 8, 24));
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(
            Tensor4::filled((1, 0, 1, 1), 0.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn flat_index_is_row_major() {
        let (n, c, h, w) = (2, 3, 4, 5);
        let t = Tensor4::zeros((n, c, h, w)).unwrap();
        let mut expected = 0usize;
        for ni in 0..n {
            for ci in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        assert_eq!(t.index(ni, ci, i, j), ((ni * c + ci) * h + i) * w + j);
                        assert_eq!(t.index(ni, ci, i, j), expected);
                        expected += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn im2col_single_receptive_field() {
        let x = Tensor4::from_vec((1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = im2col(&x, (2, 2), (1, 1), (0, 0)).unwrap();
        assert_eq!((m.rows, m.cols), (4, 1));
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn im2col_pads_with_zeros() {
        let x = Tensor4::from_vec((1, 1, 1, 1), vec![5.0]).unwrap();
        let m = im2col(&x, (3, 3), (1, 1), (1, 1)).unwrap();
        assert_eq!((m.rows, m.cols), (9, 1));
        assert_eq!(m.as_slice(), &[0.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn im2col_matches_loop_oracle() {
        let mut prng = Prng::new(31);
        let x = random_tensor((1, 1, 4, 4), &mut prng);
        let fast = im2col(&x, (3, 3), (1, 1), (0, 0)).unwrap();
        let slow = im2col_loop_oracle(&x, (3, 3), (1, 1), (0, 0));
        assert_eq!(fast, slow);

        // a batch with channels, padding and stride
        let x = random_tensor((2, 3, 5, 6), &mut prng);
        let fast = im2col(&x, (3, 2), (2, 2), (1, 0)).unwrap();
        let slow = im2col_loop_oracle(&x, (3, 2), (2, 2), (1, 0));
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn non_integral_output_dims_are_rejected() {
        let x = Tensor4::zeros((1, 1, 5, 5)).unwrap();
        assert!(matches!(
            im2col(&x, (2, 2), (2, 2), (0, 0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn col2im_inverts_im2col_on_disjoint_patches() {
        let mut prng = Prng::new(7);
        let x = random_tensor((1, 2, 4, 6), &mut prng);
        let m = im2col(&x, (2, 2), (2, 2), (0, 0)).unwrap();
        let back = col2im(&m, x.shape(), (2, 2), (2, 2), (0, 0)).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn col2im_of_zero_matrix_is_zero_tensor() {
        let m = Matrix::zeros(9, 4);
        let t = col2im(&m, (1, 1, 4, 4), (3, 3), (1, 1), (0, 0)).unwrap();
        assert!(t.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn im2col_col2im_satisfy_adjoint_identity() {
        // <m, im2col(x)> == <col2im(m), x> for random m and x.
        let mut prng = Prng::new(99);
        for &shape in &[(1, 1, 5, 5), (2, 3, 8, 24)] {
            let x = random_tensor(shape, &mut prng);
            let cols = im2col(&x, (3, 3), (1, 1), (0, 0)).unwrap();
            let m = Matrix::from_vec(
                cols.rows,
                cols.cols,
                (0..cols.rows * cols.cols)
                    .map(|_| prng.range(-1.0, 1.0))
                    .collect(),
            )
            .unwrap();
            let lhs: f64 = m
                .as_slice()
                .iter()
                .zip(cols.as_slice())
                .map(|(a, b)| a * b)
                .sum();
            let scattered = col2im(&m, shape, (3, 3), (1, 1), (0, 0)).unwrap();
            let rhs: f64 = scattered
                .as_slice()
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| a * b)
                .sum();
            let denom = lhs.abs().max(rhs.abs()).max(1e-12);
            assert!(
                ((lhs - rhs) / denom).abs() <= 1e-12,
                "adjoint identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn col2im_counts_multiplicity_on_overlapping_windows() {
        // ones through im2col/col2im yields per-cell receptive-field counts
        let x = Tensor4::filled((1, 1, 3, 3), 1.0).unwrap();
        let cols = im2col(&x, (2, 2), (1, 1), (0, 0)).unwrap();
        let ones =
            Matrix::from_vec(cols.rows, cols.cols, vec![1.0; cols.rows * cols.cols]).unwrap();
        let counts = col2im(&ones, (1, 1, 3, 3), (2, 2), (1, 1), (0, 0)).unwrap();
        assert_eq!(
            counts.as_slice(),
            &[1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0]
        );
    }

    #[test]
    fn matmul_against_hand_values() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Matrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[58.0, 64.0, 139.0, 154.0]);

        let bt = Matrix::from_vec(2, 3, vec![7.0, 9.0, 11.0, 8.0, 10.0, 12.0]).unwrap();
        let c2 = a.matmul_transpose_rhs(&bt).unwrap();
        assert_eq!(c2.as_slice(), c.as_slice());

        let at = Matrix::from_vec(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]).unwrap();
        let c3 = at.matmul_transpose_lhs(&b).unwrap();
        assert_eq!(c3.as_slice(), c.as_slice());
    }

    #[test]
    fn matmul_shape_mismatch_is_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Shape(_))));
    }
}
