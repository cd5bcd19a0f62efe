//! Tabular regression engine: preprocessing pipeline, from-scratch base
//! learners, a stacked multi-layer ensemble with out-of-fold meta-features,
//! a cross-validation harness, and component-space feature importance.
//!
//! Everything is deterministic given a base seed: random draws flow through
//! labeled [`rng::SeededRng`] streams, and fitted state round-trips through
//! JSON bitwise.

pub mod error;
pub mod folds;
pub mod harness;
pub mod importance;
pub mod learners;
pub(crate) mod linalg;
pub mod preprocess;
pub mod rng;
pub mod stacknet;
pub mod table;

pub use error::{Error, Result};
pub use folds::{make_balanced_folds, split_indices, FoldPlan};
pub use harness::{baseline_mse, dataset_stats, mse, run_cv_experiment, CvReport, FoldStat};
pub use importance::{compute_importance, rank_report, ImportanceVector, RankReport};
pub use preprocess::{fit_pipeline, transform, FittedPipeline, PipelineConfig};
pub use rng::SeededRng;
pub use stacknet::{
    default_config, fit_stacknet, predict_stacknet, stacknet_cv, StackNetConfig, TrainedStackNet,
};
pub use table::{load_csv, FeatureTable};
