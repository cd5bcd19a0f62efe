//! Principal component rotation with evidence-based rank selection.
//!
//! The rank is chosen by maximizing a Laplace approximation to the marginal
//! likelihood of a probabilistic PCA model (Minka's criterion), evaluated on
//! the covariance eigenvalue spectrum. Fixed and full ranks are also
//! supported.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::thin_svd_right;

/// How many components to keep after the eigendecomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankChoice {
    /// Maximize the Laplace log-evidence over candidate ranks.
    MinkaMle,
    /// Keep exactly this many components (capped at min(n-1, p)).
    Fixed(usize),
    /// Keep min(n-1, p) components.
    Full,
}

/// Frozen rotation: training column means, orthonormal basis, and the
/// covariance eigenvalue attached to each kept component.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaState {
    pub center: Array1<f64>,
    /// p x r matrix; column k is the k-th component direction.
    pub components: Array2<f64>,
    /// Covariance eigenvalues (sample divisor n-1), descending, length r.
    pub eigenvalues: Array1<f64>,
    pub rank: usize,
    /// True when rank selection could not score any candidate and fell back
    /// to rank 1. Not part of the persisted document.
    #[serde(skip)]
    pub rank_fallback: bool,
}

/// Log-evidence of keeping `k` components given the eigenvalue `spectrum`
/// (descending, length q = min(n, p)) of data with `n` rows.
///
/// Returns None when the candidate cannot be scored: some kept eigenvalue is
/// not strictly positive, or the residual variance estimate is not strictly
/// positive.
fn log_evidence(spectrum: &[f64], n: usize, k: usize) -> Option<f64> {
    let q = spectrum.len();
    debug_assert!(k >= 1 && k < q);
    if spectrum[..k].iter().any(|&l| l <= 0.0) {
        return None;
    }
    let nf = n as f64;
    let residual: f64 = spectrum[k..].iter().sum::<f64>() / (q - k) as f64;
    if residual <= 0.0 {
        return None;
    }

    let mut ll = 0.0;
    for i in 1..=k {
        let half = (q - i + 1) as f64 / 2.0;
        ll += ln_gamma(half) - half * std::f64::consts::PI.ln();
    }
    ll -= k as f64 * 2.0_f64.ln();
    ll -= nf / 2.0 * spectrum[..k].iter().map(|l| l.ln()).sum::<f64>();
    ll -= nf * (q - k) as f64 / 2.0 * residual.ln();
    let m = (q * k - k * (k + 1) / 2) as f64;
    ll += (m + k as f64 + 1.0) / 2.0 * (2.0 * std::f64::consts::PI).ln();
    ll -= k as f64 / 2.0 * nf.ln();

    // Hessian determinant over all (i, j) pairs with i kept and j > i; spectrum
    // entries past k are replaced by the residual variance.
    let mut pa = 0.0;
    for i in 0..k {
        for j in (i + 1)..q {
            let lj = if j < k { spectrum[j] } else { residual };
            pa += (1.0 / lj - 1.0 / spectrum[i]).ln() + (spectrum[i] - spectrum[j]).ln() + nf.ln();
        }
    }
    ll -= pa / 2.0;
    Some(ll)
}

/// Pick the rank maximizing the log-evidence over candidates 1..q-1.
/// Ties go to the smaller rank; if no candidate can be scored the result is
/// rank 1 with the fallback flag set.
pub fn minka_rank(spectrum: &[f64], n: usize) -> Result<(usize, bool)> {
    let q = spectrum.len();
    if q < 2 {
        return Err(Error::InvalidParameter(format!(
            "rank selection needs a spectrum of at least 2 eigenvalues, got {q}"
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for k in 1..q {
        if let Some(ll) = log_evidence(spectrum, n, k) {
            let better = match best {
                None => true,
                Some((_, b)) => ll > b,
            };
            if better {
                best = Some((k, ll));
            }
        }
    }
    match best {
        Some((k, _)) => Ok((k, false)),
        None => Ok((1, true)),
    }
}

/// Fit the rotation on standardized data.
pub fn fit_pca(matrix: &Array2<f64>, rank: RankChoice) -> Result<PcaState> {
    let n = matrix.nrows();
    let p = matrix.ncols();
    if n < 3 {
        return Err(Error::TooFewSamples { need: 3, got: n });
    }
    if p < 2 {
        return Err(Error::TooFewColumns { need: 2, got: p });
    }

    let center = matrix.mean_axis(Axis(0)).expect("n >= 3");
    let centered = matrix - &center.view().insert_axis(Axis(0));
    if centered.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMatrix(
            "all rows are identical; no principal directions exist".into(),
        ));
    }

    let (singular, v) = thin_svd_right(&centered)?;
    let q = singular.len();
    let spectrum: Vec<f64> = singular.iter().map(|s| s * s / (n as f64 - 1.0)).collect();

    let max_rank = (n - 1).min(p);
    let (mut r, fallback) = match rank {
        RankChoice::MinkaMle => minka_rank(&spectrum, n)?,
        RankChoice::Fixed(r) => {
            if r == 0 {
                return Err(Error::InvalidParameter(
                    "fixed rank must be at least 1".into(),
                ));
            }
            (r, false)
        }
        RankChoice::Full => (max_rank, false),
    };
    if r > max_rank {
        r = max_rank;
    }
    debug_assert!(r <= q);

    let mut components = Array2::zeros((p, r));
    let mut eigenvalues = Array1::zeros(r);
    for k in 0..r {
        let col = v.column(k);
        // Sign convention: the entry with the largest magnitude is positive;
        // magnitude ties resolve to the lowest row index.
        let mut pivot = 0;
        let mut best_mag = f64::NEG_INFINITY;
        for (i, &val) in col.iter().enumerate() {
            if val.abs() > best_mag {
                best_mag = val.abs();
                pivot = i;
            }
        }
        let flip = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            components[[i, k]] = flip * col[i];
        }
        eigenvalues[k] = spectrum[k];
    }

    Ok(PcaState {
        center,
        components,
        eigenvalues,
        rank: r,
        rank_fallback: fallback,
    })
}

/// Project rows onto the kept components: `(X - center) @ components`.
pub fn apply_pca(state: &PcaState, matrix: &Array2<f64>) -> Result<Array2<f64>> {
    if matrix.ncols() != state.center.len() {
        return Err(Error::ColumnCountMismatch {
            expected: state.center.len(),
            got: matrix.ncols(),
        });
    }
    let centered = matrix - &state.center.view().insert_axis(Axis(0));
    Ok(centered.dot(&state.components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn two_column_line_has_diagonal_direction() {
        // Points on the y = x line: the first direction is (1,1)/sqrt(2) and
        // the second eigenvalue is 0.
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let state = fit_pca(&x, RankChoice::Full).unwrap();
        assert_eq!(state.rank, 2);
        let s = 1.0 / 2.0_f64.sqrt();
        assert_abs_diff_eq!(state.components[[0, 0]], s, epsilon = 1e-12);
        assert_abs_diff_eq!(state.components[[1, 0]], s, epsilon = 1e-12);
        assert_abs_diff_eq!(state.eigenvalues[1], 0.0, epsilon = 1e-10);
        // Eigenvalue of the line direction: sample variance of the projections.
        let z = apply_pca(&state, &x).unwrap();
        let proj = z.column(0);
        let mean = proj.sum() / 4.0;
        let var = proj.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(state.eigenvalues[0], var, epsilon = 1e-10);
    }

    #[test]
    fn scores_are_centered_and_match_eigenvalues() {
        let mut gen = crate::rng::SeededRng::new(11).rng();
        let x = Array2::from_shape_fn((60, 5), |_| gen.gen_range(-2.0..2.0));
        let state = fit_pca(&x, RankChoice::Full).unwrap();
        let z = apply_pca(&state, &x).unwrap();
        for k in 0..state.rank {
            let col = z.column(k);
            let mean = col.sum() / 60.0;
            assert!(mean.abs() < 1e-10);
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 59.0;
            assert_abs_diff_eq!(var, state.eigenvalues[k], epsilon = 1e-9);
        }
        // Orthonormal basis.
        for a in 0..state.rank {
            for b in a..state.rank {
                let dot = state.components.column(a).dot(&state.components.column(b));
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spiked_spectrum_recovers_planted_rank() {
        // Three strong directions plus isotropic noise: evidence maximization
        // should report rank 3.
        let mut gen = crate::rng::SeededRng::new(7).rng();
        let noise = Normal::new(0.0, 0.05).unwrap();
        let n = 400;
        let p = 12;
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            let a: f64 = gen.gen_range(-3.0..3.0);
            let b: f64 = gen.gen_range(-2.0..2.0);
            let c: f64 = gen.gen_range(-1.0..1.0);
            for j in 0..p {
                let jf = j as f64;
                x[[i, j]] = a * (0.3 * jf).sin()
                    + b * (0.5 * jf).cos()
                    + c * (0.15 * jf + 1.0).sin()
                    + noise.sample(&mut gen);
            }
        }
        let state = fit_pca(&x, RankChoice::MinkaMle).unwrap();
        assert_eq!(state.rank, 3);
        assert!(!state.rank_fallback);
    }

    #[test]
    fn full_rank_reconstruction_is_lossless() {
        let mut gen = crate::rng::SeededRng::new(19).rng();
        let x = Array2::from_shape_fn((30, 6), |_| gen.gen_range(-4.0..4.0));
        let state = fit_pca(&x, RankChoice::Full).unwrap();
        assert_eq!(state.rank, 6);
        let z = apply_pca(&state, &x).unwrap();
        let rebuilt = z.dot(&state.components.t()) + &state.center.view().insert_axis(ndarray::Axis(0));
        for (a, b) in x.iter().zip(rebuilt.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn fixed_rank_is_capped_at_sample_limit() {
        let mut gen = crate::rng::SeededRng::new(3).rng();
        let x = Array2::from_shape_fn((4, 10), |_| gen.gen_range(-1.0..1.0));
        let state = fit_pca(&x, RankChoice::Fixed(9)).unwrap();
        assert_eq!(state.rank, 3); // min(n-1, p) = 3
        let full = fit_pca(&x, RankChoice::Full).unwrap();
        assert_eq!(full.rank, 3);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let x = array![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]];
        assert!(matches!(
            fit_pca(&x, RankChoice::Full),
            Err(Error::DegenerateMatrix(_))
        ));
    }

    #[test]
    fn too_small_inputs_are_rejected() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(matches!(
            fit_pca(&x, RankChoice::Full),
            Err(Error::TooFewSamples { .. })
        ));
        let one_col = array![[1.0], [2.0], [3.0]];
        assert!(matches!(
            fit_pca(&one_col, RankChoice::Full),
            Err(Error::TooFewColumns { .. })
        ));
    }

    #[test]
    fn column_mismatch_on_apply() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.5]];
        let state = fit_pca(&x, RankChoice::Full).unwrap();
        let bad = array![[1.0], [2.0], [3.0]];
        assert!(matches!(
            apply_pca(&state, &bad),
            Err(Error::ColumnCountMismatch { .. })
        ));
    }

    #[test]
    fn tiny_tied_spectrum_selects_rank_one() {
        // With q = 2 the only candidate is k = 1, and a tied spectrum drives
        // the pair term to -inf, making the evidence +inf — still rank 1.
        let (r, fallback) = minka_rank(&[1.0, 1.0], 10).unwrap();
        assert_eq!(r, 1);
        assert!(!fallback);
    }

    #[test]
    fn zero_spectrum_falls_back() {
        let (r, fallback) = minka_rank(&[0.0, 0.0, 0.0], 10).unwrap();
        assert_eq!(r, 1);
        assert!(fallback);
    }

    #[test]
    fn evidence_matches_direct_formula_on_small_case() {
        // Oracle: evaluate the closed-form expression independently for
        // q = 4, k = 2 and a hand-picked spectrum.
        let spectrum = [5.0_f64, 2.0, 0.5, 0.1];
        let n = 50;
        let k = 2;
        let q = 4;
        let nf = n as f64;
        let sigma2: f64 = (0.5 + 0.1) / 2.0;
        let mut want = 0.0;
        for i in 1..=k {
            let half = (q - i + 1) as f64 / 2.0;
            want += ln_gamma(half) - half * std::f64::consts::PI.ln();
        }
        want -= k as f64 * 2.0_f64.ln();
        want -= nf / 2.0 * (5.0_f64.ln() + 2.0_f64.ln());
        want -= nf * (q - k) as f64 / 2.0 * sigma2.ln();
        let m = (q * k - k * (k + 1) / 2) as f64;
        want += (m + k as f64 + 1.0) / 2.0 * (2.0 * std::f64::consts::PI).ln();
        want -= k as f64 / 2.0 * nf.ln();
        let lam = |j: usize| if j < k { spectrum[j] } else { sigma2 };
        let mut pa = 0.0;
        for i in 0..k {
            for j in (i + 1)..q {
                pa += (1.0 / lam(j) - 1.0 / spectrum[i]).ln()
                    + (spectrum[i] - spectrum[j]).ln()
                    + nf.ln();
            }
        }
        want -= pa / 2.0;

        let got = log_evidence(&spectrum, n, k).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
    }
}
