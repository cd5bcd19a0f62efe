//! Tree ensembles: bagged forests, randomized-threshold forests, and
//! stage-wise gradient boosting, all built on the CART fitter.
//!
//! Every tree owns the rng stream derived from the ensemble stream by its
//! tree index, so parallel fitting is schedule-independent; predictions
//! reduce over trees in fixed index order.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::learners::tree::{fit_cart, CartOptions, Tree};
use crate::rng::SeededRng;

/// n index draws with replacement from 0..n.
pub fn bootstrap_indices(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Bagged best-split forest: tree t trains on a bootstrap resample drawn
/// from stream `rng.derive(t)`, considering all features at every split.
pub(crate) fn fit_random_forest(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    n_estimators: usize,
    max_depth: usize,
    min_samples_leaf: usize,
    rng: &SeededRng,
) -> Vec<Tree> {
    let n = x.nrows();
    let opts = CartOptions::best(max_depth, min_samples_leaf);
    (0..n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.derive(t as u64).rng();
            let idx = bootstrap_indices(&mut r, n);
            let xb = x.select(Axis(0), &idx);
            let yb = Array1::from_iter(idx.iter().map(|&i| y[i]));
            fit_cart(&xb.view(), &yb.view(), &opts, Some(&mut r))
        })
        .collect()
}

/// Randomized forest: every tree sees all samples (no bootstrap) and draws
/// one uniform threshold per candidate feature.
pub(crate) fn fit_extra_trees(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    n_estimators: usize,
    max_depth: usize,
    min_samples_leaf: usize,
    rng: &SeededRng,
) -> Vec<Tree> {
    let opts = CartOptions::random(max_depth, min_samples_leaf);
    (0..n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.derive(t as u64).rng();
            fit_cart(x, y, &opts, Some(&mut r))
        })
        .collect()
}

/// Squared-error gradient boosting: start from the target mean, then each
/// stage fits a best-split tree to the current residuals and moves the
/// running prediction by `learning_rate` times its output. Deterministic —
/// no random draws anywhere.
pub(crate) fn fit_gradient_boosting(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    n_estimators: usize,
    max_depth: usize,
    learning_rate: f64,
    min_samples_leaf: usize,
) -> (f64, Vec<Tree>) {
    let n = x.nrows();
    let initial = y.sum() / n as f64;
    let opts = CartOptions::best(max_depth, min_samples_leaf);
    let mut current = Array1::from_elem(n, initial);
    let mut trees = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let residuals = y - &current;
        let tree = fit_cart(x, &residuals.view(), &opts, None);
        for i in 0..n {
            current[i] += learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    (initial, trees)
}

/// Mean over trees in index order (fixed reduction order, so results do not
/// depend on how the forest was scheduled during fitting).
pub(crate) fn forest_predict(trees: &[Tree], x: &ArrayView2<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(x.nrows());
    for tree in trees {
        out += &tree.predict(x);
    }
    out / trees.len() as f64
}

/// initial + learning_rate * Σ tree outputs, in stage order.
pub(crate) fn boosting_predict(
    initial: f64,
    learning_rate: f64,
    trees: &[Tree],
    x: &ArrayView2<f64>,
) -> Array1<f64> {
    let mut out = Array1::from_elem(x.nrows(), initial);
    for tree in trees {
        out.scaled_add(learning_rate, &tree.predict(x));
    }
    out
}
