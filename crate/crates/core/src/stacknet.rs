//! Multi-layer stacked generalization with restacking.
//!
//! Each layer holds a set of base models, all trained against the final
//! target. During training, a layer contributes one out-of-fold meta-column
//! per model (its prediction for row i comes from a clone trained with row i
//! held out), and with restacking enabled the next layer sees the original
//! features plus every earlier layer's meta-columns. At inference the
//! meta-columns are produced by full-data retrained models.
//!
//! Rng stream conventions (base = the rng handed to [`fit_stacknet`]):
//! - fold plan for layer L:       split("stacknet/oof-folds", [L])
//! - OOF fit, model stream s, fold f: split("stacknet/oof-fit", [L, s, f])
//! - full-data fit, model stream s:   split("stacknet/full-fit", [L, s])

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::folds::{make_balanced_folds, split_indices, FoldPlan};
use crate::learners::{fit, predict, EstimatorSpec, FittedEstimator, ModelSpec};
use crate::rng::SeededRng;

fn default_restack() -> bool {
    true
}

fn default_oof_folds() -> usize {
    5
}

/// Layered ensemble description, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackNetConfig {
    pub layers: Vec<Vec<EstimatorSpec>>,
    #[serde(default = "default_restack")]
    pub restack: bool,
    #[serde(default = "default_oof_folds")]
    pub oof_folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl StackNetConfig {
    /// Check structural invariants. Returns human-readable warnings for
    /// legal-but-suspect configurations (they do not fail the build).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.layers.is_empty() {
            return Err(Error::InvalidConfig("at least one layer is required".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(Error::InvalidConfig(format!("layer {} is empty", l + 1)));
            }
            for spec in layer {
                spec.model.validate()?;
            }
        }
        if self.oof_folds < 2 {
            return Err(Error::InvalidConfig(
                "meta-feature generation needs at least 2 folds".into(),
            ));
        }
        let mut warnings = Vec::new();
        let last = self.layers.last().expect("non-empty");
        if last.len() > 1 {
            warnings.push(format!(
                "final layer has {} models; their outputs will be averaged",
                last.len()
            ));
        }
        Ok(warnings)
    }

    pub fn total_models(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: StackNetConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialized config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// The published architecture: three layers, eleven models, restacking on.
pub fn default_config() -> StackNetConfig {
    let forest = |n, d| ModelSpec::RandomForest {
        n_estimators: n,
        max_depth: d,
        min_samples_leaf: 1,
    };
    let extra = |n, d| ModelSpec::ExtraTrees {
        n_estimators: n,
        max_depth: d,
        min_samples_leaf: 1,
    };
    let layer1 = vec![
        ModelSpec::BayesianRidge {
            max_iter: 300,
            tol: 1e-3,
        },
        forest(1000, 7),
        forest(1000, 9),
        forest(800, 11),
        extra(1800, 9),
        extra(2200, 11),
        ModelSpec::GradientBoosting {
            n_estimators: 40,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        },
    ];
    let layer2 = vec![
        ModelSpec::KernelRidge { alpha: 512.0 },
        forest(800, 13),
        extra(3200, 15),
    ];
    let layer3 = vec![ModelSpec::Ridge { alpha: 512.0 }];

    let mut stream = 0u64;
    let mut with_streams = |models: Vec<ModelSpec>| -> Vec<EstimatorSpec> {
        models
            .into_iter()
            .map(|m| {
                let spec = EstimatorSpec::new(m, stream);
                stream += 1;
                spec
            })
            .collect()
    };
    StackNetConfig {
        layers: vec![
            with_streams(layer1),
            with_streams(layer2),
            with_streams(layer3),
        ],
        restack: true,
        oof_folds: 5,
        seed: 42,
    }
}

/// A fully trained ensemble plus the fold plans used for its meta-features
/// (kept for leakage audits).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedStackNet {
    pub config: StackNetConfig,
    pub fitted_layers: Vec<Vec<FittedEstimator>>,
    pub input_width: usize,
    pub fold_plans: Vec<FoldPlan>,
}

pub fn oof_fold_stream(base: &SeededRng, layer: usize) -> SeededRng {
    base.split("stacknet/oof-folds", &[layer as u64])
}

pub fn oof_fit_stream(base: &SeededRng, layer: usize, seed_stream: u64, fold: usize) -> SeededRng {
    base.split("stacknet/oof-fit", &[layer as u64, seed_stream, fold as u64])
}

pub fn full_fit_stream(base: &SeededRng, layer: usize, seed_stream: u64) -> SeededRng {
    base.split("stacknet/full-fit", &[layer as u64, seed_stream])
}

/// One out-of-fold meta-column per model: entry i is predicted by the clone
/// of the model trained on the fold plan's train split that excludes i.
pub fn oof_meta_columns(
    models: &[EstimatorSpec],
    x: &Array2<f64>,
    y: &Array1<f64>,
    plan: &FoldPlan,
    base: &SeededRng,
    layer: usize,
) -> Result<Array2<f64>> {
    let n = x.nrows();
    let mut meta = Array2::zeros((n, models.len()));
    for (m, spec) in models.iter().enumerate() {
        for fold in 0..plan.k {
            let (train_idx, test_idx) = split_indices(plan, fold)?;
            let x_train = x.select(Axis(0), &train_idx);
            let y_train = Array1::from_iter(train_idx.iter().map(|&i| y[i]));
            let stream = oof_fit_stream(base, layer, spec.seed_stream, fold);
            let est = fit(spec, &x_train, &y_train, &stream)?;
            let x_test = x.select(Axis(0), &test_idx);
            let preds = predict(&est, &x_test)?;
            for (row, &i) in test_idx.iter().enumerate() {
                meta[[i, m]] = preds[row];
            }
        }
    }
    Ok(meta)
}

/// Train every layer: out-of-fold meta-columns feed the next layer, while
/// full-data refits are kept for inference.
pub fn fit_stacknet(
    config: &StackNetConfig,
    x: &Array2<f64>,
    y: &Array1<f64>,
    rng: &SeededRng,
) -> Result<TrainedStackNet> {
    config.validate()?;
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::TargetLengthMismatch {
            got: y.len(),
            expected: n,
        });
    }
    if n < 2 * config.oof_folds {
        return Err(Error::TooFewSamples {
            need: 2 * config.oof_folds,
            got: n,
        });
    }

    let mut accumulated = x.clone();
    let mut fitted_layers = Vec::with_capacity(config.layers.len());
    let mut fold_plans = Vec::with_capacity(config.layers.len());
    let last = config.layers.len() - 1;

    for (l, layer) in config.layers.iter().enumerate() {
        let plan = make_balanced_folds(
            y.as_slice().expect("targets are contiguous"),
            config.oof_folds,
            &oof_fold_stream(rng, l),
        )?;

        // Full-data refits serve inference for this layer.
        let mut fitted = Vec::with_capacity(layer.len());
        for spec in layer {
            let stream = full_fit_stream(rng, l, spec.seed_stream);
            fitted.push(fit(spec, &accumulated, y, &stream)?);
        }

        // Meta-columns are only needed as input to a following layer.
        if l != last {
            let meta = oof_meta_columns(layer, &accumulated, y, &plan, rng, l)?;
            accumulated = if config.restack {
                ndarray::concatenate(Axis(1), &[accumulated.view(), meta.view()])
                    .expect("row counts agree")
            } else {
                meta
            };
        }

        fitted_layers.push(fitted);
        fold_plans.push(plan);
    }

    Ok(TrainedStackNet {
        config: config.clone(),
        fitted_layers,
        input_width: x.ncols(),
        fold_plans,
    })
}

/// Replay the layer wiring with full-data models; the output is the final
/// layer's column (or the mean of its columns when it has several models).
pub fn predict_stacknet(net: &TrainedStackNet, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != net.input_width {
        return Err(Error::ColumnCountMismatch {
            expected: net.input_width,
            got: x.ncols(),
        });
    }
    let q = x.nrows();
    let mut accumulated = x.clone();
    let last = net.fitted_layers.len() - 1;
    for (l, layer) in net.fitted_layers.iter().enumerate() {
        let mut cols = Array2::zeros((q, layer.len()));
        for (m, est) in layer.iter().enumerate() {
            let preds = predict(est, &accumulated)?;
            cols.column_mut(m).assign(&preds);
        }
        if l == last {
            return Ok(if layer.len() == 1 {
                cols.column(0).to_owned()
            } else {
                cols.mean_axis(Axis(1)).expect("at least one model")
            });
        }
        accumulated = if net.config.restack {
            ndarray::concatenate(Axis(1), &[accumulated.view(), cols.view()])
                .expect("row counts agree")
        } else {
            cols
        };
    }
    unreachable!("loop returns at the final layer");
}

/// K-fold cross-validation of the whole ensemble on a fixed feature matrix.
///
/// Streams: fold plan from split("cv/folds", []); the fold-f refit trains
/// with base stream split("cv/fit", [f]).
pub fn stacknet_cv(
    config: &StackNetConfig,
    x: &Array2<f64>,
    y: &Array1<f64>,
    k_folds: usize,
    rng: &SeededRng,
) -> Result<crate::harness::CvReport> {
    let n = x.nrows();
    if n < 2 * k_folds {
        return Err(Error::TooFewSamples {
            need: 2 * k_folds,
            got: n,
        });
    }
    let plan = make_balanced_folds(
        y.as_slice().expect("targets are contiguous"),
        k_folds,
        &rng.split("cv/folds", &[]),
    )?;

    let mut per_fold_mse = Vec::with_capacity(k_folds);
    let mut fold_stats = Vec::with_capacity(k_folds);
    let mut squared_error_total = 0.0;
    for fold in 0..k_folds {
        let (train_idx, test_idx) = split_indices(&plan, fold)?;
        let x_train = x.select(Axis(0), &train_idx);
        let y_train = Array1::from_iter(train_idx.iter().map(|&i| y[i]));
        let x_test = x.select(Axis(0), &test_idx);
        let y_test = Array1::from_iter(test_idx.iter().map(|&i| y[i]));

        let net = fit_stacknet(config, &x_train, &y_train, &rng.split("cv/fit", &[fold as u64]))?;
        let preds = predict_stacknet(&net, &x_test)?;
        let fold_mse = crate::harness::mse(preds.as_slice().unwrap(), y_test.as_slice().unwrap())?;
        squared_error_total += fold_mse * test_idx.len() as f64;
        per_fold_mse.push(fold_mse);
        let (mean, std) = crate::harness::dataset_stats(y_test.as_slice().unwrap())?;
        fold_stats.push(crate::harness::FoldStat { mean, std });
    }

    Ok(crate::harness::CvReport {
        per_fold_mse,
        pooled_mse: squared_error_total / n as f64,
        fold_stats,
        baseline_mse: crate::harness::baseline_mse(y.as_slice().unwrap())?,
        config_digest: config.digest(),
        fold_pipeline_digests: Vec::new(),
    })
}
