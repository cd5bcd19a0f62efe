//! Command-line surface for the stacked tabular regressor: train a model
//! bundle, predict from it, cross-validate a configuration, and report
//! feature importance.

pub mod bundle;
pub mod commands;
