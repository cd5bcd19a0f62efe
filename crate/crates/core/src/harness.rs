//! Metrics, baselines, and the end-to-end cross-validation driver.

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folds::{make_balanced_folds, split_indices};
use crate::preprocess::{fit_pipeline, transform, PipelineConfig};
use crate::rng::SeededRng;
use crate::stacknet::{fit_stacknet, predict_stacknet, StackNetConfig};
use crate::table::FeatureTable;

/// Population mean and standard deviation of one fold's test targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldStat {
    pub mean: f64,
    pub std: f64,
}

/// Everything a cross-validation run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub per_fold_mse: Vec<f64>,
    pub pooled_mse: f64,
    pub fold_stats: Vec<FoldStat>,
    pub baseline_mse: f64,
    pub config_digest: String,
    /// One preprocessing digest per fold. Distinct values prove the
    /// pipeline was refit inside each fold; identical values mean the
    /// fit-once protocol was used. Empty when no pipeline was involved.
    pub fold_pipeline_digests: Vec<String>,
}

/// Mean squared error between equal-length prediction and truth slices.
pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::TargetLengthMismatch {
            got: predictions.len(),
            expected: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyTable("mse needs at least one sample".into()));
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / predictions.len() as f64)
}

/// MSE of the constant mean predictor — the population variance of the
/// targets, computed literally as `mse(mean-vector, targets)` so the
/// identity with [`mse`] is exact, not merely approximate.
pub fn baseline_mse(targets: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::EmptyTable("baseline needs at least one target".into()));
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    mse(&vec![mean; targets.len()], targets)
}

/// Population mean and standard deviation (divisor n).
pub fn dataset_stats(targets: &[f64]) -> Result<(f64, f64)> {
    if targets.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: targets.len(),
        });
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// K-fold cross-validation of preprocessing + ensemble on a raw table.
///
/// By default the preprocessing pipeline (standardize, project, select) is
/// refit inside each fold on that fold's training rows only, so no test
/// statistics leak into feature selection. `fit_pipeline_once` instead fits
/// preprocessing a single time on the full table before splitting — the
/// historical protocol, kept for comparison.
pub fn run_cv_experiment(
    table: &FeatureTable,
    config: &StackNetConfig,
    k_folds: usize,
    pipeline_config: &PipelineConfig,
    seed: u64,
    fit_pipeline_once: bool,
) -> Result<CvReport> {
    config.validate()?;
    let y = table.target().ok_or(Error::MissingTarget)?.clone();
    let n = table.n_rows();
    if n < 2 * k_folds {
        return Err(Error::TooFewSamples {
            need: 2 * k_folds,
            got: n,
        });
    }

    let rng = SeededRng::new(seed);
    let plan = make_balanced_folds(
        y.as_slice().expect("targets are contiguous"),
        k_folds,
        &rng.split("cv/folds", &[]),
    )?;

    let shared_pipeline = if fit_pipeline_once {
        Some(fit_pipeline(table, pipeline_config)?)
    } else {
        None
    };

    let mut per_fold_mse = Vec::with_capacity(k_folds);
    let mut fold_stats = Vec::with_capacity(k_folds);
    let mut fold_pipeline_digests = Vec::with_capacity(k_folds);
    let mut squared_error_total = 0.0;

    for fold in 0..k_folds {
        let (train_idx, test_idx) = split_indices(&plan, fold)?;
        let train_table = table.select_rows(&train_idx);
        let y_train = Array1::from_iter(train_idx.iter().map(|&i| y[i]));
        let y_test: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();

        let pipeline = match &shared_pipeline {
            Some(p) => p.clone(),
            None => fit_pipeline(&train_table, pipeline_config)?,
        };
        fold_pipeline_digests.push(pipeline.digest());

        let x_train = transform(&pipeline, train_table.values())?;
        let x_test = transform(
            &pipeline,
            &table.values().select(Axis(0), &test_idx),
        )?;

        let net = fit_stacknet(config, &x_train, &y_train, &rng.split("cv/fit", &[fold as u64]))?;
        let preds = predict_stacknet(&net, &x_test)?;

        let fold_mse = mse(preds.as_slice().expect("contiguous"), &y_test)?;
        squared_error_total += fold_mse * test_idx.len() as f64;
        per_fold_mse.push(fold_mse);
        let (mean, std) = dataset_stats(&y_test)?;
        fold_stats.push(FoldStat { mean, std });
    }

    Ok(CvReport {
        per_fold_mse,
        pooled_mse: squared_error_total / n as f64,
        fold_stats,
        baseline_mse: baseline_mse(y.as_slice().expect("contiguous"))?,
        config_digest: config.digest(),
        fold_pipeline_digests,
    })
}

/// Aligned text rendering: one row per fold, then the pooled score against
/// the constant-mean baseline.
pub fn render_report(report: &CvReport) -> String {
    let mut out = String::new();
    out.push_str("fold    mse         target_mean  target_std\n");
    for (i, (m, fs)) in report
        .per_fold_mse
        .iter()
        .zip(&report.fold_stats)
        .enumerate()
    {
        out.push_str(&format!(
            "{:<7} {:<11.4} {:<12.4} {:<10.4}\n",
            i + 1,
            m,
            fs.mean,
            fs.std
        ));
    }
    out.push_str(&format!("\npooled_mse    {:.4}\n", report.pooled_mse));
    out.push_str(&format!("baseline_mse  {:.4}\n", report.baseline_mse));
    out.push_str(&format!("config_digest {}\n", report.config_digest));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{EstimatorSpec, ModelSpec};
    use crate::preprocess::RankChoice;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn tiny_config() -> StackNetConfig {
        StackNetConfig {
            layers: vec![
                vec![
                    EstimatorSpec::new(ModelSpec::Ridge { alpha: 1.0 }, 0),
                    EstimatorSpec::new(
                        ModelSpec::ExtraTrees {
                            n_estimators: 8,
                            max_depth: 4,
                            min_samples_leaf: 1,
                        },
                        1,
                    ),
                ],
                vec![EstimatorSpec::new(ModelSpec::Ridge { alpha: 8.0 }, 2)],
            ],
            restack: true,
            oof_folds: 4,
            seed: 0,
        }
    }

    fn synthetic_table(n: usize, p: usize, noise: f64, seed: u64) -> FeatureTable {
        let mut gen = SeededRng::new(seed).rng();
        let values = Array2::from_shape_fn((n, p), |_| gen.gen_range(-1.0..1.0));
        let target = Array1::from_shape_fn(n, |i| {
            let signal: f64 = (0..p).map(|j| values[[i, j]] * (j as f64 + 1.0)).sum();
            signal + noise * gen.gen_range(-1.0..1.0)
        });
        let ids = (0..n).map(|i| format!("subj{i:04}")).collect();
        let columns = (0..p).map(|j| format!("feat{j:02}")).collect();
        FeatureTable::new(
            "subject_id".into(),
            ids,
            columns,
            values,
            Some("target".into()),
            Some(target),
        )
        .unwrap()
    }

    #[test]
    fn mse_hand_cases() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[3.0, -3.0]).unwrap(), 9.0);
        assert!(matches!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(Error::TargetLengthMismatch { .. })
        ));
        assert!(matches!(mse(&[], &[]), Err(Error::EmptyTable(_))));
    }

    #[test]
    fn constant_mean_predictor_equals_population_variance_exactly() {
        let mut gen = SeededRng::new(3).rng();
        let y: Vec<f64> = (0..257).map(|_| gen.gen_range(-5.0..20.0)).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let direct = mse(&vec![mean; y.len()], &y).unwrap();
        assert_eq!(baseline_mse(&y).unwrap().to_bits(), direct.to_bits());
    }

    #[test]
    fn baseline_hand_cases() {
        assert_eq!(baseline_mse(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(baseline_mse(&[-1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(baseline_mse(&[]), Err(Error::EmptyTable(_))));
    }

    #[test]
    fn baseline_on_challenge_shaped_targets() {
        let normal = Normal::new(0.0f64, 9.19).unwrap();
        let mut gen = SeededRng::new(2026).rng();
        let y: Vec<f64> = (0..4154).map(|_| normal.sample(&mut gen)).collect();
        let baseline = baseline_mse(&y).unwrap();
        assert!(
            (80.0..=89.0).contains(&baseline),
            "baseline {baseline} outside sampling band around 84.46"
        );
    }

    #[test]
    fn dataset_stats_cases() {
        let (m, s) = dataset_stats(&[-1.0, 1.0]).unwrap();
        assert_eq!((m, s), (0.0, 1.0));

        let (m, s) = dataset_stats(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        assert!((s - 3.0_f64.sqrt()).abs() < 1e-15);

        assert!(matches!(
            dataset_stats(&[1.0]),
            Err(Error::TooFewSamples { .. })
        ));

        let normal = Normal::new(0.0f64, 9.19).unwrap();
        let mut gen = SeededRng::new(7).rng();
        let y: Vec<f64> = (0..4154).map(|_| normal.sample(&mut gen)).collect();
        let (m, s) = dataset_stats(&y).unwrap();
        assert!(m.abs() < 0.3, "mean {m}");
        assert!((s - 9.19).abs() < 0.3, "std {s}");
    }

    #[test]
    fn cv_beats_baseline_on_signal_and_is_deterministic() {
        let table = synthetic_table(120, 6, 0.2, 42);
        let pipeline_config = PipelineConfig {
            select_k: 4,
            variance_threshold: 1e-8,
            rank: RankChoice::Full,
        };
        let report = run_cv_experiment(&table, &tiny_config(), 4, &pipeline_config, 9, false).unwrap();
        assert!(
            report.pooled_mse < report.baseline_mse,
            "pooled {} vs baseline {}",
            report.pooled_mse,
            report.baseline_mse
        );
        assert_eq!(report.per_fold_mse.len(), 4);
        assert_eq!(report.fold_stats.len(), 4);
        assert_eq!(report.fold_pipeline_digests.len(), 4);
        assert_eq!(report.config_digest, tiny_config().digest());

        let again = run_cv_experiment(&table, &tiny_config(), 4, &pipeline_config, 9, false).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn pooled_equals_weighted_fold_mean_and_folds_balance_targets() {
        // 200 gaussian-target rows, 10 folds of 20: pooled = plain mean.
        let mut table = synthetic_table(200, 5, 0.5, 11);
        // Replace target with wider gaussian noise to exercise balance.
        let normal = Normal::new(0.0f64, 9.19).unwrap();
        let mut gen = SeededRng::new(13).rng();
        let y = Array1::from_shape_fn(200, |_| normal.sample(&mut gen));
        table = FeatureTable::new(
            table.id_name().to_string(),
            table.subject_ids().to_vec(),
            table.columns().to_vec(),
            table.values().clone(),
            Some("target".into()),
            Some(y.clone()),
        )
        .unwrap();

        let pipeline_config = PipelineConfig {
            select_k: 3,
            variance_threshold: 1e-8,
            rank: RankChoice::Full,
        };
        let config = StackNetConfig {
            layers: vec![vec![EstimatorSpec::new(ModelSpec::Ridge { alpha: 512.0 }, 0)]],
            restack: true,
            oof_folds: 4,
            seed: 0,
        };
        let report = run_cv_experiment(&table, &config, 10, &pipeline_config, 3, false).unwrap();

        let plain_mean: f64 =
            report.per_fold_mse.iter().sum::<f64>() / report.per_fold_mse.len() as f64;
        assert!(
            (report.pooled_mse - plain_mean).abs() < 1e-10,
            "pooled {} vs mean {}",
            report.pooled_mse,
            plain_mean
        );

        let (_, global_std) = dataset_stats(y.as_slice().unwrap()).unwrap();
        for fs in &report.fold_stats {
            assert!(
                (fs.std - global_std).abs() < 0.2 * global_std,
                "fold std {} vs global {}",
                fs.std,
                global_std
            );
        }
    }

    #[test]
    fn per_fold_refit_digests_differ_but_fit_once_digests_match() {
        let table = synthetic_table(80, 5, 0.3, 21);
        let pipeline_config = PipelineConfig {
            select_k: 3,
            variance_threshold: 1e-8,
            rank: RankChoice::Full,
        };
        let config = StackNetConfig {
            layers: vec![vec![EstimatorSpec::new(ModelSpec::Ridge { alpha: 8.0 }, 0)]],
            restack: true,
            oof_folds: 4,
            seed: 0,
        };

        let refit = run_cv_experiment(&table, &config, 4, &pipeline_config, 5, false).unwrap();
        let mut unique = refit.fold_pipeline_digests.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 4, "per-fold refits must differ");

        let once = run_cv_experiment(&table, &config, 4, &pipeline_config, 5, true).unwrap();
        let mut unique = once.fold_pipeline_digests.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 1, "fit-once protocol shares one pipeline");
    }

    #[test]
    fn experiment_precondition_errors() {
        let table = synthetic_table(12, 4, 0.1, 1);
        let pipeline_config = PipelineConfig::default();
        let config = tiny_config();
        assert!(matches!(
            run_cv_experiment(&table, &config, 10, &pipeline_config, 0, false),
            Err(Error::TooFewSamples { .. })
        ));

        let untargeted = FeatureTable::new(
            "id".into(),
            (0..30).map(|i| i.to_string()).collect(),
            (0..4).map(|j| format!("c{j}")).collect(),
            Array2::zeros((30, 4)),
            None,
            None,
        )
        .unwrap();
        assert!(matches!(
            run_cv_experiment(&untargeted, &config, 4, &pipeline_config, 0, false),
            Err(Error::MissingTarget)
        ));
    }

    #[test]
    fn report_renders_every_fold_and_the_summary() {
        let report = CvReport {
            per_fold_mse: vec![1.5, 2.5],
            pooled_mse: 2.0,
            fold_stats: vec![
                FoldStat { mean: 0.1, std: 1.0 },
                FoldStat { mean: -0.1, std: 1.1 },
            ],
            baseline_mse: 3.0,
            config_digest: "abc123".into(),
            fold_pipeline_digests: vec![],
        };
        let text = render_report(&report);
        assert!(text.contains("1.5000"));
        assert!(text.contains("2.5000"));
        assert!(text.contains("pooled_mse    2.0000"));
        assert!(text.contains("baseline_mse  3.0000"));
        assert!(text.contains("abc123"));
        assert_eq!(text.lines().count(), 7);
    }
}
