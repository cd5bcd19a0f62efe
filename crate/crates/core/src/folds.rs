//! Target-balanced k-fold partitions.
//!
//! Folds are built so that each fold's target mean and standard deviation
//! track the global values: samples are sorted by target, walked in
//! consecutive groups of k, and each group is spread over the k folds in a
//! freshly shuffled order.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A k-fold assignment over n samples. Fold sizes differ by at most one and
/// every fold index in `[0, k)` occurs at least once.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.assignments.len()
    }
}

/// Build a target-balanced fold plan.
pub fn make_balanced_folds(targets: &[f64], k: usize, rng: &SeededRng) -> Result<FoldPlan> {
    let n = targets.len();
    if k < 2 {
        return Err(Error::TooFewFolds(k));
    }
    if k > n {
        return Err(Error::TooManyFolds { k, n });
    }
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteInput(format!("targets[{i}]")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Ties broken by index so the sort is total and reproducible.
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]).then(a.cmp(&b)));

    let mut gen = rng.rng();
    let mut assignments = vec![0usize; n];
    let mut labels: Vec<usize> = (0..k).collect();
    for group in order.chunks(k) {
        labels.shuffle(&mut gen);
        for (slot, &sample) in group.iter().enumerate() {
            assignments[sample] = labels[slot];
        }
    }
    Ok(FoldPlan { k, assignments })
}

/// Split a plan into the train/test index pair for one fold. Both lists are
/// ascending; they are disjoint and together cover every sample.
pub fn split_indices(plan: &FoldPlan, fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if fold >= plan.k {
        return Err(Error::FoldOutOfRange { fold, k: plan.k });
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &f) in plan.assignments.iter().enumerate() {
        if f == fold {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    Ok((train, test))
}
