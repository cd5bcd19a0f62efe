//! Feature preprocessing: standardization, principal-component denoising,
//! variance filtering, and univariate top-k selection, composed into one
//! fit/transform pipeline.
//!
//! The fitted pipeline is immutable: `transform` replays frozen state and
//! never looks at the incoming rows' statistics, so held-out data cannot
//! leak into the representation.

pub mod pca;
pub mod select;
pub mod standardize;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::table::FeatureTable;

pub use pca::{apply_pca, fit_pca, minka_rank, PcaState, RankChoice};
pub use select::{f_regression, fit_variance_mask, select_top_k, SelectorState};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizerState};

/// Pipeline hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of component columns kept by the final selection stage.
    #[serde(default = "default_select_k")]
    pub select_k: usize,
    /// Population-variance cutoff for dropping numerically dead components.
    #[serde(default = "default_variance_threshold")]
    pub variance_threshold: f64,
    /// Rank policy for the component rotation.
    #[serde(default = "default_rank_choice")]
    pub rank: RankChoice,
}

fn default_select_k() -> usize {
    24
}

fn default_variance_threshold() -> f64 {
    1e-8
}

fn default_rank_choice() -> RankChoice {
    RankChoice::MinkaMle
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            select_k: default_select_k(),
            variance_threshold: default_variance_threshold(),
            rank: default_rank_choice(),
        }
    }
}

/// All frozen preprocessing state, in application order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PipelineDoc", into = "PipelineDoc")]
pub struct FittedPipeline {
    pub standardizer: StandardizerState,
    pub pca: PcaState,
    pub selector: SelectorState,
    pub k: usize,
}

impl FittedPipeline {
    /// Dimensionality chain (p, r, k): raw columns, kept components,
    /// selected components.
    pub fn dimension_chain(&self) -> (usize, usize, usize) {
        (self.standardizer.n_columns(), self.pca.rank, self.k)
    }

    /// Content hash of the frozen state (hex SHA-256 of the canonical
    /// serialized form). Two pipelines agree on every prediction-relevant
    /// number iff their digests match.
    pub fn digest(&self) -> String {
        let doc = PipelineDoc::from(self.clone());
        let json = serde_json::to_string(&doc).expect("pipeline doc serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Fit every stage on the table's feature matrix and target.
pub fn fit_pipeline(table: &FeatureTable, config: &PipelineConfig) -> Result<FittedPipeline> {
    let target = table.target().ok_or(Error::MissingTarget)?;

    let standardizer = fit_standardizer(table.values())?;
    let standardized = apply_standardizer(&standardizer, table.values())?;

    let pca = fit_pca(&standardized, config.rank)?;
    let scores = apply_pca(&pca, &standardized)?;

    let variance_mask = fit_variance_mask(&scores, config.variance_threshold)?;
    let f_all = f_regression(&scores, target)?;
    let selected = select_top_k(&f_all, &variance_mask, config.select_k)?;

    let f_values = variance_mask
        .iter()
        .enumerate()
        .filter(|(_, &kept)| kept)
        .map(|(j, _)| f_all[j])
        .collect();

    Ok(FittedPipeline {
        standardizer,
        pca,
        selector: SelectorState {
            variance_mask,
            f_values,
            selected,
        },
        k: config.select_k,
    })
}

/// Replay the frozen stages on new rows: standardize, project, gather the
/// selected component columns.
pub fn transform(pipeline: &FittedPipeline, matrix: &Array2<f64>) -> Result<Array2<f64>> {
    let standardized = apply_standardizer(&pipeline.standardizer, matrix)?;
    let scores = apply_pca(&pipeline.pca, &standardized)?;
    let n = scores.nrows();
    let mut out = Array2::zeros((n, pipeline.selector.selected.len()));
    for (dst, &src) in pipeline.selector.selected.iter().enumerate() {
        out.column_mut(dst).assign(&scores.column(src));
    }
    Ok(out)
}

/// Flat persisted form of [`FittedPipeline`]. Component directions are
/// stored as `r` columns of length `p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineDoc {
    pub format_version: u32,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub center: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub variance_mask: Vec<bool>,
    pub f_values: Vec<f64>,
    pub selected: Vec<usize>,
    pub k: usize,
}

pub const PIPELINE_FORMAT_VERSION: u32 = 1;

impl From<FittedPipeline> for PipelineDoc {
    fn from(p: FittedPipeline) -> Self {
        let rank = p.pca.rank;
        let components = (0..rank)
            .map(|k| p.pca.components.column(k).to_vec())
            .collect();
        PipelineDoc {
            format_version: PIPELINE_FORMAT_VERSION,
            mu: p.standardizer.mu.to_vec(),
            sigma: p.standardizer.sigma.to_vec(),
            center: p.center_vec(),
            components,
            eigenvalues: p.pca.eigenvalues.to_vec(),
            variance_mask: p.selector.variance_mask,
            f_values: p.selector.f_values,
            selected: p.selector.selected,
            k: p.k,
        }
    }
}

impl FittedPipeline {
    fn center_vec(&self) -> Vec<f64> {
        self.pca.center.to_vec()
    }
}

impl TryFrom<PipelineDoc> for FittedPipeline {
    type Error = Error;

    fn try_from(doc: PipelineDoc) -> Result<Self> {
        if doc.format_version != PIPELINE_FORMAT_VERSION {
            return Err(Error::UnsupportedFormatVersion {
                got: doc.format_version,
                expected: PIPELINE_FORMAT_VERSION,
            });
        }
        let p = doc.mu.len();
        let r = doc.components.len();
        if doc.sigma.len() != p || doc.center.len() != p {
            return Err(Error::InvalidSpec(
                "standardizer and center lengths disagree".into(),
            ));
        }
        if doc.eigenvalues.len() != r || doc.variance_mask.len() != r {
            return Err(Error::InvalidSpec(
                "eigenvalue or mask length does not match component count".into(),
            ));
        }
        let surviving = doc.variance_mask.iter().filter(|&&b| b).count();
        if doc.f_values.len() != surviving {
            return Err(Error::InvalidSpec(
                "one F value per surviving component is required".into(),
            ));
        }
        if doc.selected.len() != doc.k
            || doc.selected.windows(2).any(|w| w[0] >= w[1])
            || doc.selected.iter().any(|&s| s >= r || !doc.variance_mask[s])
        {
            return Err(Error::InvalidSpec(
                "selected indices must be ascending, in range, unmasked, and k-long".into(),
            ));
        }
        let mut components = Array2::zeros((p, r));
        for (k, col) in doc.components.iter().enumerate() {
            if col.len() != p {
                return Err(Error::InvalidSpec(
                    "component direction length does not match column count".into(),
                ));
            }
            for (i, &v) in col.iter().enumerate() {
                components[[i, k]] = v;
            }
        }
        Ok(FittedPipeline {
            standardizer: StandardizerState {
                mu: Array1::from(doc.mu),
                sigma: Array1::from(doc.sigma),
            },
            pca: PcaState {
                center: Array1::from(doc.center),
                components,
                eigenvalues: Array1::from(doc.eigenvalues),
                rank: r,
                rank_fallback: false,
            },
            selector: SelectorState {
                variance_mask: doc.variance_mask,
                f_values: doc.f_values,
                selected: doc.selected,
            },
            k: doc.k,
        })
    }
}
