//! Variance filtering and univariate F-statistic feature selection.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frozen selection decisions, expressed in component-index space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorState {
    /// One flag per component column; true means the column survived the
    /// variance filter.
    pub variance_mask: Vec<bool>,
    /// F statistic per surviving component, ordered by component index.
    pub f_values: Vec<f64>,
    /// Selected component indices, ascending.
    pub selected: Vec<usize>,
}

impl SelectorState {
    /// F statistic of a component by its original column index, if it
    /// survived the variance filter.
    pub fn f_of(&self, component: usize) -> Option<f64> {
        let mut cursor = 0;
        for (idx, &kept) in self.variance_mask.iter().enumerate() {
            if kept {
                if idx == component {
                    return Some(self.f_values[cursor]);
                }
                cursor += 1;
            }
        }
        None
    }
}

/// Mark columns whose population variance strictly exceeds `threshold`.
pub fn fit_variance_mask(matrix: &Array2<f64>, threshold: f64) -> Result<Vec<bool>> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance threshold must be finite and non-negative, got {threshold}"
        )));
    }
    let n = matrix.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mask = matrix
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / nf;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            var > threshold
        })
        .collect();
    Ok(mask)
}

/// Univariate regression F statistic per column.
///
/// For each column the squared Pearson correlation r2 with the target yields
/// `F = r2 / (1 - r2) * (n - 2)`. A constant column scores 0; a perfectly
/// correlated column saturates to `f64::MAX`.
pub fn f_regression(matrix: &Array2<f64>, target: &Array1<f64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if n != target.len() {
        return Err(Error::TargetLengthMismatch {
            got: target.len(),
            expected: n,
        });
    }
    if n < 3 {
        return Err(Error::TooFewSamples { need: 3, got: n });
    }
    let nf = n as f64;
    let ty_mean = target.sum() / nf;
    let ty: Vec<f64> = target.iter().map(|v| v - ty_mean).collect();
    let ty_ss: f64 = ty.iter().map(|v| v * v).sum();
    if ty_ss == 0.0 {
        return Err(Error::ConstantTarget);
    }

    let dof = nf - 2.0;
    let fs = matrix
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / nf;
            let mut xy = 0.0;
            let mut xx = 0.0;
            for (x, yc) in col.iter().zip(&ty) {
                let xc = x - mean;
                xy += xc * yc;
                xx += xc * xc;
            }
            if xx == 0.0 {
                return 0.0;
            }
            let r2 = (xy * xy) / (xx * ty_ss);
            if r2 >= 1.0 {
                f64::MAX
            } else {
                let f = r2 / (1.0 - r2) * dof;
                if f.is_finite() {
                    f
                } else {
                    f64::MAX
                }
            }
        })
        .collect();
    Ok(fs)
}

/// Pick the `k` best-scoring surviving columns.
///
/// `f_values` has one score per column (masked columns' scores are ignored);
/// the result lists the winners' column indices in ascending order. Score
/// ties resolve in favor of the lower column index.
pub fn select_top_k(f_values: &[f64], mask: &[bool], k: usize) -> Result<Vec<usize>> {
    if f_values.len() != mask.len() {
        return Err(Error::InvalidParameter(format!(
            "scores ({}) and mask ({}) lengths differ",
            f_values.len(),
            mask.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter(
            "selection size must be at least 1".into(),
        ));
    }
    let mut surviving: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if k > surviving.len() {
        return Err(Error::SelectionTooLarge {
            k,
            available: surviving.len(),
        });
    }
    // Stable sort by descending score keeps lower indices first on ties.
    surviving.sort_by(|&a, &b| f_values[b].total_cmp(&f_values[a]));
    let mut winners: Vec<usize> = surviving[..k].to_vec();
    winners.sort_unstable();
    Ok(winners)
}
