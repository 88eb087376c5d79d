//! The two preprocessing transforms: log-scaling and cyclic column
//! centering.
//!
//! Log-scaling maps a raw charge q to `ln(1 + q) / 10`, compressing the
//! large dynamic range between muons and everything else into [0, 1].
//! The `1 +` offset keeps zero charges at exactly zero; the divisor 10 is
//! fixed, so the generator caps raw charges at e^10 - 1.
//!
//! Centering cyclically rotates the columns so the column holding the
//! global maximum lands on index 12, keeping regions of interest away from
//! the unwrap seam. The supervised path applies both transforms; the
//! unsupervised (autoencoder) path applies only the log-scale.

use crate::error::{Error, Result};
use crate::synth::{EventGrid, COLS, PMT_COUNT, ROWS};

/// Column index the global maximum is rotated onto (0-based).
pub const CENTER_COLUMN: usize = 12;

/// An 8x24 grid of values in [0, 1], with centering bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedGrid {
    data: Vec<f64>,
    centered: bool,
    shift: usize,
}

impl PreprocessedGrid {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * COLS + col]
    }

    /// Row-major values, 192 of them, all in [0, 1].
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Total column rotation applied so far, in [0, 24).
    pub fn shift(&self) -> usize {
        self.shift
    }
}

/// `out = ln(1 + q) / 10` elementwise. Rejects negative inputs.
pub fn log_scale(grid: &EventGrid) -> Result<PreprocessedGrid> {
    let mut data = Vec::with_capacity(PMT_COUNT);
    for &q in grid.values() {
        if q < 0.0 || !q.is_finite() {
            return Err(Error::Domain(format!("cannot log-scale charge {q}")));
        }
        data.push(q.ln_1p() / 10.0);
    }
    Ok(PreprocessedGrid {
        data,
        centered: false,
        shift: 0,
    })
}

/// Rotate columns so the global maximum sits in column 12.
///
/// Ties break to the lowest original column index; a constant grid
/// therefore rotates column 0 onto column 12. Idempotent: re-centering a
/// centered grid is the identity.
pub fn center_columns(grid: &PreprocessedGrid) -> PreprocessedGrid {
    let mut best = f64::NEG_INFINITY;
    let mut best_col = 0usize;
    for c in 0..COLS {
        for r in 0..ROWS {
            let v = grid.get(r, c);
            if v > best {
                best = v;
                best_col = c;
            }
        }
    }
    let rot = (CENTER_COLUMN + COLS - best_col) % COLS;
    let mut data = vec![0.0; PMT_COUNT];
    for r in 0..ROWS {
        for c in 0..COLS {
            data[r * COLS + (c + rot) % COLS] = grid.get(r, c);
        }
    }
    PreprocessedGrid {
        data,
        centered: true,
        shift: (grid.shift + rot) % COLS,
    }
}

/// Which transform chain to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessPath {
    /// Log-scale then center: the classifier path.
    Supervised,
    /// Log-scale only: the autoencoder path.
    Unsupervised,
}

pub fn prepare(grids: &[EventGrid], path: PreprocessPath) -> Result<Vec<PreprocessedGrid>> {
    grids
        .iter()
        .map(|g| {
            let scaled = log_scale(g)?;
            Ok(match path {
                PreprocessPath::Supervised => center_columns(&scaled),
                PreprocessPath::Unsupervised => scaled,
            })
        })
        .collect()
}
