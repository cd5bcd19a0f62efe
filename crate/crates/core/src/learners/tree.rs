//! CART regression trees: variance-reduction splits over axis-aligned
//! thresholds, with exhaustive (midpoint) or randomized threshold choice.
//!
//! Trees are stored as a flat arena in preorder (each parent precedes its
//! children), which doubles as the serialized form.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One arena slot: a leaf with the mean target of its training subset, or an
/// internal split sending `x[feature] <= threshold` to `left`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted regression tree. `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &ArrayView2<f64>) -> Array1<f64> {
        Array1::from_shape_fn(x.nrows(), |i| self.predict_row(x.row(i)))
    }

    /// Longest root-to-leaf path measured in splits.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// How candidate thresholds are generated per feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Scan midpoints between consecutive distinct sorted values.
    Best,
    /// Draw one uniform threshold in [min, max) per non-constant feature.
    Random,
}

/// Which features compete at each split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSample {
    All,
    /// A fresh uniform subset of this size at every split.
    Subset(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct CartOptions {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub threshold_mode: ThresholdMode,
    pub feature_sample: FeatureSample,
}

impl CartOptions {
    pub fn best(max_depth: usize, min_samples_leaf: usize) -> Self {
        CartOptions {
            max_depth,
            min_samples_leaf,
            threshold_mode: ThresholdMode::Best,
            feature_sample: FeatureSample::All,
        }
    }

    pub fn random(max_depth: usize, min_samples_leaf: usize) -> Self {
        CartOptions {
            max_depth,
            min_samples_leaf,
            threshold_mode: ThresholdMode::Random,
            feature_sample: FeatureSample::All,
        }
    }
}

/// Fit one tree. The rng is consumed only by randomized threshold mode and
/// feature subsampling; exhaustive all-feature fits never draw, so
/// `None` is acceptable there.
pub fn fit_cart(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    opts: &CartOptions,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let n = x.nrows();
    assert!(n >= 1, "a tree needs at least one sample");
    assert!(n == y.len(), "feature rows and targets must align");
    let idx: Vec<usize> = (0..n).collect();
    let mut nodes = Vec::new();
    grow(x, y, &idx, 0, opts, &mut rng, &mut nodes);
    Tree { nodes }
}

fn grow(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    idx: &[usize],
    depth: usize,
    opts: &CartOptions,
    rng: &mut Option<&mut ChaCha8Rng>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    let pure = idx.iter().all(|&i| y[i] == y[idx[0]]);
    if depth >= opts.max_depth || idx.len() < 2 * opts.min_samples_leaf || pure {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let split = find_split(x, y, idx, opts, rng);
    let (feature, threshold) = match split {
        Some(s) => s,
        None => {
            nodes.push(TreeNode::Leaf { value: mean });
            return nodes.len() - 1;
        }
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[[i, feature]] <= threshold);
    debug_assert!(left_idx.len() >= opts.min_samples_leaf);
    debug_assert!(right_idx.len() >= opts.min_samples_leaf);

    let at = nodes.len();
    nodes.push(TreeNode::Leaf { value: mean }); // placeholder keeps preorder
    let left = grow(x, y, &left_idx, depth + 1, opts, rng, nodes);
    let right = grow(x, y, &right_idx, depth + 1, opts, rng, nodes);
    nodes[at] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

/// Lowest-total-child-variance split over the candidate features. Ties are
/// broken toward the lowest feature index, then the smallest threshold,
/// which the ascending scan order yields for free with strict comparison.
fn find_split(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    idx: &[usize],
    opts: &CartOptions,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Option<(usize, f64)> {
    let d = x.ncols();
    let features: Vec<usize> = match opts.feature_sample {
        FeatureSample::All => (0..d).collect(),
        FeatureSample::Subset(k) => {
            let r = rng.as_deref_mut().expect("feature subsampling needs an rng");
            let mut chosen = rand::seq::index::sample(r, d, k.min(d)).into_vec();
            chosen.sort_unstable();
            chosen
        }
    };

    let msl = opts.min_samples_leaf;
    let m = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut consider = |cost: f64, feature: usize, threshold: f64| {
        let better = match best {
            None => true,
            Some((c, _, _)) => cost < c,
        };
        if better {
            best = Some((cost, feature, threshold));
        }
    };

    match opts.threshold_mode {
        ThresholdMode::Best => {
            let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
            for &f in &features {
                pairs.clear();
                pairs.extend(idx.iter().map(|&i| (x[[i, f]], y[i])));
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
                let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
                let mut sum_l = 0.0;
                let mut sq_l = 0.0;
                for i in 1..m {
                    sum_l += pairs[i - 1].1;
                    sq_l += pairs[i - 1].1 * pairs[i - 1].1;
                    if pairs[i - 1].0 == pairs[i].0 {
                        continue;
                    }
                    if i < msl || m - i < msl {
                        continue;
                    }
                    let nl = i as f64;
                    let nr = (m - i) as f64;
                    let sum_r = total_sum - sum_l;
                    let sq_r = total_sq - sq_l;
                    let cost = (sq_l - sum_l * sum_l / nl) + (sq_r - sum_r * sum_r / nr);
                    let threshold = 0.5 * (pairs[i - 1].0 + pairs[i].0);
                    consider(cost, f, threshold);
                }
            }
        }
        ThresholdMode::Random => {
            for &f in &features {
                let mut vmin = f64::INFINITY;
                let mut vmax = f64::NEG_INFINITY;
                for &i in idx {
                    let v = x[[i, f]];
                    vmin = vmin.min(v);
                    vmax = vmax.max(v);
                }
                if vmin >= vmax {
                    continue; // constant feature: no draw, no candidate
                }
                let r = rng
                    .as_deref_mut()
                    .expect("random threshold mode needs an rng");
                let threshold = r.gen_range(vmin..vmax);
                let mut nl = 0.0;
                let mut sum_l = 0.0;
                let mut sq_l = 0.0;
                let mut nr = 0.0;
                let mut sum_r = 0.0;
                let mut sq_r = 0.0;
                for &i in idx {
                    let t = y[i];
                    if x[[i, f]] <= threshold {
                        nl += 1.0;
                        sum_l += t;
                        sq_l += t * t;
                    } else {
                        nr += 1.0;
                        sum_r += t;
                        sq_r += t * t;
                    }
                }
                if (nl as usize) < msl || (nr as usize) < msl {
                    continue;
                }
                let cost = (sq_l - sum_l * sum_l / nl) + (sq_r - sum_r * sum_r / nr);
                consider(cost, f, threshold);
            }
        }
    }

    best.map(|(_, f, t)| (f, t))
}
