//! Per-column standard score normalization.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frozen per-column means and population standard deviations (divisor n).
/// Columns with zero deviation are degenerate and map to output 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizerState {
    pub mu: Array1<f64>,
    pub sigma: Array1<f64>,
}

impl StandardizerState {
    pub fn n_columns(&self) -> usize {
        self.mu.len()
    }

    /// Indices of degenerate (constant) columns.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.sigma
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Fit column means and population standard deviations.
pub fn fit_standardizer(values: &Array2<f64>) -> Result<StandardizerState> {
    let n = values.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let p = values.ncols();
    let mut mu = Array1::zeros(p);
    let mut sigma = Array1::zeros(p);
    for j in 0..p {
        let col = values.column(j);
        let m = col.sum() / nf;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
        mu[j] = m;
        sigma[j] = var.sqrt();
    }
    Ok(StandardizerState { mu, sigma })
}

/// Apply frozen standardization: `(x - mu) / sigma`, 0 for degenerate columns.
pub fn apply_standardizer(state: &StandardizerState, matrix: &Array2<f64>) -> Result<Array2<f64>> {
    if matrix.ncols() != state.n_columns() {
        return Err(Error::ColumnCountMismatch {
            expected: state.n_columns(),
            got: matrix.ncols(),
        });
    }
    let mut out = matrix.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let (m, s) = (state.mu[j], state.sigma[j]);
        if s == 0.0 {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| (v - m) / s);
        }
    }
    Ok(out)
}
