//! Persisted model bundle: one JSON document holding the frozen
//! preprocessing pipeline, the trained ensemble, and provenance. Floats are
//! encoded and parsed exactly, so a load/predict round trip is bitwise.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use stacknet_core::error::{Error, Result};
use stacknet_core::preprocess::transform;
use stacknet_core::stacknet::predict_stacknet;
use stacknet_core::{FeatureTable, FittedPipeline, TrainedStackNet};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// How and when the bundle was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_digest: String,
    /// RFC 3339 creation timestamp. Excluded from determinism guarantees.
    pub created_at: String,
    /// Feature column names the model was trained on, in training order.
    pub feature_columns: Vec<String>,
}

/// Everything needed to reproduce predictions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub pipeline: FittedPipeline,
    pub stacknet: TrainedStackNet,
    pub provenance: Provenance,
}

impl ModelBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Load and validate a bundle. The format version is checked before the
    /// payload is decoded so a version mismatch is reported as such rather
    /// than as a shape error.
    pub fn load(path: &Path) -> Result<ModelBundle> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| {
                Error::InvalidParameter("bundle has no format_version field".into())
            })?;
        if version != u64::from(BUNDLE_FORMAT_VERSION) {
            return Err(Error::UnsupportedFormatVersion {
                got: version as u32,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Predict for every row of a raw table.
    ///
    /// Columns are aligned to the training columns by name, so the input
    /// may reorder columns or carry extras. With `strict_columns` the input
    /// header must instead match the training header exactly, position by
    /// position.
    pub fn predict_table(&self, table: &FeatureTable, strict_columns: bool) -> Result<Array1<f64>> {
        let wanted = &self.provenance.feature_columns;
        if strict_columns {
            if table.columns().len() != wanted.len() {
                return Err(Error::InvalidParameter(format!(
                    "strict column check: expected {} feature columns, found {}",
                    wanted.len(),
                    table.columns().len()
                )));
            }
            for (i, (got, want)) in table.columns().iter().zip(wanted).enumerate() {
                if got != want {
                    return Err(Error::InvalidParameter(format!(
                        "strict column check: position {i} should be '{want}', found '{got}'"
                    )));
                }
            }
        } else if let Some(missing) = wanted.iter().find(|w| !table.columns().contains(w)) {
            return Err(Error::InvalidParameter(format!(
                "input is missing feature column '{missing}'"
            )));
        }
        let aligned = table.gather_columns(wanted)?;
        let x = transform(&self.pipeline, &aligned)?;
        predict_stacknet(&self.stacknet, &x)
    }
}
