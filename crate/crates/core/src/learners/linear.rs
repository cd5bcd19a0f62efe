//! Ridge, Bayesian ridge (evidence maximization), and linear-kernel ridge.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::Result;
use crate::linalg::{eigh_descending, solve_spd};

/// Center columns and targets; returns (Xc, yc, column means, target mean).
fn center(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>, f64) {
    let xm = x.mean_axis(Axis(0)).expect("at least one row");
    let ym = y.sum() / y.len() as f64;
    let xc = x - &xm.view().insert_axis(Axis(0));
    let yc = y.mapv(|v| v - ym);
    (xc, yc, xm, ym)
}

/// Penalized least squares with an unpenalized intercept:
/// solve (XcᵀXc + αI) w = Xcᵀyc on centered data.
pub(crate) fn fit_ridge(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    alpha: f64,
) -> Result<(Array1<f64>, f64)> {
    let (xc, yc, xm, ym) = center(x, y);
    let d = x.ncols();
    let mut gram = xc.t().dot(&xc);
    for i in 0..d {
        gram[[i, i]] += alpha;
    }
    let rhs = xc.t().dot(&yc);
    let weights = solve_spd(&gram, &rhs)?;
    let intercept = ym - xm.dot(&weights);
    Ok((weights, intercept))
}

pub(crate) struct BayesianFit {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub noise_precision: f64,
    pub weight_precision: f64,
    pub iterations: usize,
}

/// Evidence-maximization linear regression. Precisions: `a` for the noise,
/// `b` for the weights; both adapt until the posterior mean stabilizes.
pub(crate) fn fit_bayesian_ridge(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<BayesianFit> {
    const EPS: f64 = 1e-6;
    let n = x.nrows();
    let d = x.ncols();
    let nf = n as f64;

    let ym = y.sum() / nf;
    let var_y = y.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>() / nf;
    if var_y == 0.0 {
        // Constant target: intercept-only model with the limit precisions the
        // update equations produce for zero residuals and zero weights.
        return Ok(BayesianFit {
            weights: Array1::zeros(d),
            intercept: ym,
            noise_precision: (nf + 2.0 * EPS) / (2.0 * EPS),
            weight_precision: 1.0,
            iterations: 0,
        });
    }

    let (xc, yc, xm, _) = center(x, y);
    let gram = xc.t().dot(&xc);
    let rhs = xc.t().dot(&yc);
    let (eigvals, q) = eigh_descending(&gram);
    let eigvals = eigvals.mapv(|l| l.max(0.0)); // clip tiny negative round-off
    let qt_rhs = q.t().dot(&rhs);

    let mut a = 1.0 / var_y;
    let mut b = 1.0;
    let posterior_mean = |a: f64, b: f64| -> Array1<f64> {
        let scaled = Array1::from_shape_fn(d, |i| qt_rhs[i] / (b + a * eigvals[i]));
        q.dot(&scaled.mapv(|v| v * a))
    };

    let mut m = Array1::zeros(d);
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let m_new = posterior_mean(a, b);
        let gamma: f64 = eigvals.iter().map(|&s| a * s / (b + a * s)).sum();
        b = (gamma + 2.0 * EPS) / (m_new.dot(&m_new) + 2.0 * EPS);
        let resid = &yc - &xc.dot(&m_new);
        a = (nf - gamma + 2.0 * EPS) / (resid.dot(&resid) + 2.0 * EPS);
        let delta = m_new
            .iter()
            .zip(m.iter())
            .map(|(p, q): (&f64, &f64)| (p - q).abs())
            .fold(0.0_f64, f64::max);
        m = m_new;
        if delta < tol {
            break;
        }
    }
    // Report the mean consistent with the final precisions.
    let weights = posterior_mean(a, b);
    let intercept = ym - xm.dot(&weights);
    Ok(BayesianFit {
        weights,
        intercept,
        noise_precision: a,
        weight_precision: b,
        iterations,
    })
}

/// Linear-kernel ridge: dual coefficients c = (XXᵀ + αI)⁻¹ y, no centering
/// and no intercept.
pub(crate) fn fit_kernel_ridge(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    alpha: f64,
) -> Result<Array1<f64>> {
    let n = x.nrows();
    let mut k = x.dot(&x.t());
    for i in 0..n {
        k[[i, i]] += alpha;
    }
    solve_spd(&k, &y.to_owned())
}

/// Dual-form prediction: out[j] = Σ_i c_i ⟨train_i, query_j⟩.
pub(crate) fn kernel_predict(
    train: &ArrayView2<f64>,
    coefficients: &ArrayView1<f64>,
    queries: &ArrayView2<f64>,
) -> Array1<f64> {
    queries.dot(&train.t()).dot(coefficients)
}
