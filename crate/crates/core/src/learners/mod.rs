//! Base regressors behind one uniform spec/fit/predict contract.
//!
//! Six model kinds are supported: ridge, Bayesian ridge, linear-kernel
//! ridge, random forest, extremely randomized trees, and gradient boosting.
//! All are fit from scratch on dense matrices; every stochastic component
//! draws from the [`SeededRng`] stream handed to [`fit`].

pub mod ensemble;
pub mod linear;
pub mod tree;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub use ensemble::bootstrap_indices;
pub use tree::{fit_cart, CartOptions, FeatureSample, ThresholdMode, Tree, TreeNode};

fn default_max_iter() -> usize {
    300
}

fn default_tol() -> f64 {
    1e-3
}

fn default_min_samples_leaf() -> usize {
    1
}

fn default_learning_rate() -> f64 {
    0.1
}

/// Model kind plus its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Ridge {
        alpha: f64,
    },
    BayesianRidge {
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    KernelRidge {
        alpha: f64,
    },
    RandomForest {
        n_estimators: usize,
        max_depth: usize,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
    },
    ExtraTrees {
        n_estimators: usize,
        max_depth: usize,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
    },
    GradientBoosting {
        n_estimators: usize,
        max_depth: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
    },
}

impl ModelSpec {
    /// Human-readable one-line label for report tables.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Ridge { alpha } => format!("ridge(alpha={alpha})"),
            ModelSpec::BayesianRidge { .. } => "bayesian_ridge".to_string(),
            ModelSpec::KernelRidge { alpha } => format!("kernel_ridge(alpha={alpha})"),
            ModelSpec::RandomForest {
                n_estimators,
                max_depth,
                ..
            } => format!("random_forest(n={n_estimators}, depth={max_depth})"),
            ModelSpec::ExtraTrees {
                n_estimators,
                max_depth,
                ..
            } => format!("extra_trees(n={n_estimators}, depth={max_depth})"),
            ModelSpec::GradientBoosting {
                n_estimators,
                max_depth,
                learning_rate,
                ..
            } => format!(
                "gradient_boosting(n={n_estimators}, depth={max_depth}, rate={learning_rate})"
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )))
            }
        };
        let at_least_one = |name: &str, v: usize| -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be at least 1")))
            }
        };
        match self {
            ModelSpec::Ridge { alpha } | ModelSpec::KernelRidge { alpha } => {
                positive("alpha", *alpha)
            }
            ModelSpec::BayesianRidge { max_iter, tol } => {
                at_least_one("max_iter", *max_iter)?;
                positive("tol", *tol)
            }
            ModelSpec::RandomForest {
                n_estimators,
                max_depth,
                min_samples_leaf,
            }
            | ModelSpec::ExtraTrees {
                n_estimators,
                max_depth,
                min_samples_leaf,
            } => {
                at_least_one("n_estimators", *n_estimators)?;
                at_least_one("max_depth", *max_depth)?;
                at_least_one("min_samples_leaf", *min_samples_leaf)
            }
            ModelSpec::GradientBoosting {
                n_estimators,
                max_depth,
                learning_rate,
                min_samples_leaf,
            } => {
                at_least_one("n_estimators", *n_estimators)?;
                at_least_one("max_depth", *max_depth)?;
                at_least_one("min_samples_leaf", *min_samples_leaf)?;
                positive("learning_rate", *learning_rate)
            }
        }
    }
}

/// A model plus the rng stream id it draws from inside an ensemble run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub seed_stream: u64,
}

impl EstimatorSpec {
    pub fn new(model: ModelSpec, seed_stream: u64) -> Self {
        EstimatorSpec { model, seed_stream }
    }
}

/// Kind-specific fitted parameters, all finite and serialization-friendly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "params", rename_all = "snake_case")]
pub enum FittedParams {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
    Bayesian {
        weights: Vec<f64>,
        intercept: f64,
        noise_precision: f64,
        weight_precision: f64,
        iterations: usize,
    },
    /// Dual-form model: keeps its training rows for kernel evaluation.
    Dual {
        coefficients: Vec<f64>,
        train_rows: Vec<Vec<f64>>,
    },
    Forest {
        trees: Vec<Tree>,
    },
    Boosting {
        initial: f64,
        learning_rate: f64,
        trees: Vec<Tree>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedEstimator {
    pub spec: EstimatorSpec,
    /// (rows, columns) of the training matrix.
    pub train_shape: (usize, usize),
    pub params: FittedParams,
}

fn require_finite(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("feature matrix".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("target vector".into()));
    }
    Ok(())
}

/// Fit one estimator. `rng` is the stream the model may draw from; callers
/// that run many models derive one stream per model from `seed_stream`.
pub fn fit(spec: &EstimatorSpec, x: &Array2<f64>, y: &Array1<f64>, rng: &SeededRng) -> Result<FittedEstimator> {
    spec.model.validate()?;
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::TargetLengthMismatch {
            got: y.len(),
            expected: n,
        });
    }
    let min_rows = match spec.model {
        ModelSpec::Ridge { .. } | ModelSpec::KernelRidge { .. } => 1,
        _ => 2,
    };
    if n < min_rows {
        return Err(Error::TooFewSamples {
            need: min_rows,
            got: n,
        });
    }
    require_finite(&x.view(), &y.view())?;

    let params = match &spec.model {
        ModelSpec::Ridge { alpha } => {
            let (weights, intercept) = linear::fit_ridge(&x.view(), &y.view(), *alpha)?;
            FittedParams::Linear {
                weights: weights.to_vec(),
                intercept,
            }
        }
        ModelSpec::BayesianRidge { max_iter, tol } => {
            let fit = linear::fit_bayesian_ridge(&x.view(), &y.view(), *max_iter, *tol)?;
            FittedParams::Bayesian {
                weights: fit.weights.to_vec(),
                intercept: fit.intercept,
                noise_precision: fit.noise_precision,
                weight_precision: fit.weight_precision,
                iterations: fit.iterations,
            }
        }
        ModelSpec::KernelRidge { alpha } => {
            let coefficients = linear::fit_kernel_ridge(&x.view(), &y.view(), *alpha)?;
            FittedParams::Dual {
                coefficients: coefficients.to_vec(),
                train_rows: x.rows().into_iter().map(|r| r.to_vec()).collect(),
            }
        }
        ModelSpec::RandomForest {
            n_estimators,
            max_depth,
            min_samples_leaf,
        } => FittedParams::Forest {
            trees: ensemble::fit_random_forest(
                &x.view(),
                &y.view(),
                *n_estimators,
                *max_depth,
                *min_samples_leaf,
                rng,
            ),
        },
        ModelSpec::ExtraTrees {
            n_estimators,
            max_depth,
            min_samples_leaf,
        } => FittedParams::Forest {
            trees: ensemble::fit_extra_trees(
                &x.view(),
                &y.view(),
                *n_estimators,
                *max_depth,
                *min_samples_leaf,
                rng,
            ),
        },
        ModelSpec::GradientBoosting {
            n_estimators,
            max_depth,
            learning_rate,
            min_samples_leaf,
        } => {
            let (initial, trees) = ensemble::fit_gradient_boosting(
                &x.view(),
                &y.view(),
                *n_estimators,
                *max_depth,
                *learning_rate,
                *min_samples_leaf,
            );
            FittedParams::Boosting {
                initial,
                learning_rate: *learning_rate,
                trees,
            }
        }
    };

    Ok(FittedEstimator {
        spec: spec.clone(),
        train_shape: (n, x.ncols()),
        params,
    })
}

/// Kind-dispatched deterministic prediction.
pub fn predict(est: &FittedEstimator, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != est.train_shape.1 {
        return Err(Error::ColumnCountMismatch {
            expected: est.train_shape.1,
            got: x.ncols(),
        });
    }
    let out = match &est.params {
        FittedParams::Linear { weights, intercept }
        | FittedParams::Bayesian {
            weights, intercept, ..
        } => {
            let w = Array1::from(weights.clone());
            x.dot(&w) + *intercept
        }
        FittedParams::Dual {
            coefficients,
            train_rows,
        } => {
            let n = train_rows.len();
            let d = est.train_shape.1;
            let mut train = Array2::zeros((n, d));
            for (i, row) in train_rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    train[[i, j]] = v;
                }
            }
            let c = Array1::from(coefficients.clone());
            linear::kernel_predict(&train.view(), &c.view(), &x.view())
        }
        FittedParams::Forest { trees } => ensemble::forest_predict(trees, &x.view()),
        FittedParams::Boosting {
            initial,
            learning_rate,
            trees,
        } => ensemble::boosting_predict(*initial, *learning_rate, trees, &x.view()),
    };
    Ok(out)
}
