//! Thin adapters between the crate's `ndarray` data types and the `nalgebra`
//! decomposition routines used for SVD, symmetric eigendecomposition, and
//! SPD solves.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub(crate) fn to_dmatrix(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(x.nrows(), x.ncols(), x.iter().cloned())
}

fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin SVD of `x`: singular values (descending) and right singular vectors
/// as the columns of a p x q matrix, q = min(n, p).
pub(crate) fn thin_svd_right(x: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let m = to_dmatrix(x);
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateMatrix("SVD failed to produce V^T".into()))?;
    let singular = Array1::from_iter(svd.singular_values.iter().cloned());
    // v_t is q x p; transpose to columns-as-vectors.
    let v = from_dmatrix(&v_t.transpose());
    Ok((singular, v))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub(crate) fn eigh_descending(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = to_dmatrix(a);
    let eig = m.symmetric_eigen();
    let q = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors =
        Array2::from_shape_fn((q, q), |(row, col)| eig.eigenvectors[(row, order[col])]);
    (values, vectors)
}

/// Solve `a x = b` for symmetric positive definite `a` (Cholesky, LU fallback).
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let m = to_dmatrix(a);
    let rhs = DVector::from_iterator(b.len(), b.iter().cloned());
    let solution = match m.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateMatrix("singular linear system".into()))?,
    };
    Ok(Array1::from_iter(solution.iter().cloned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn svd_right_vectors_are_orthonormal() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let (s, v) = thin_svd_right(&x).unwrap();
        assert!(s[0] >= s[1]);
        let gram = v.t().dot(&v);
        assert_abs_diff_eq!(gram[[0, 0]], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gram[[1, 1]], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gram[[0, 1]], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn eigh_matches_known_2x2() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = eigh_descending(&a);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-10);
        // First eigenvector proportional to (1,1)/sqrt(2).
        assert_abs_diff_eq!(vecs[[0, 0]].abs(), (0.5f64).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn spd_solve_round_trips() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![1.0, 2.0];
        let x = solve_spd(&a, &b).unwrap();
        let back = a.dot(&x);
        assert_abs_diff_eq!(back[0], b[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back[1], b[1], epsilon = 1e-12);
    }
}
