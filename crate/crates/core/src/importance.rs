//! Feature importance by backprojection: per-component selection F values
//! are combined with component eigenvalues and the component directions to
//! produce one non-negative score per original input column, normalized so
//! the scores sum to 100.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FittedPipeline;

/// Per-input-column importance scores. `values[i]` belongs to `names[i]`;
/// scores are non-negative and sum to 100.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// True when every selected component had a zero F statistic, so the
    /// scores carry no information and were set uniformly to 100/p.
    pub uniform_fallback: bool,
}

/// Ranked view of an [`ImportanceVector`]: the `top` highest-scoring
/// features (descending) and the `bottom` lowest-scoring ones (ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub top: Vec<(String, f64)>,
    pub bottom: Vec<(String, f64)>,
}

/// Map component-space selection evidence back onto the original columns.
///
/// For each selected component k with F statistic F_k, eigenvalue l_k, and
/// direction u_k (a length-p column of the projection basis), the importance
/// of input column i is sum_k |Fbar_k * lbar_k * u_ik| where Fbar and lbar
/// are F and l normalized to sum to one over the selected set. The result
/// is rescaled to sum to 100.
///
/// F values are divided by their maximum before normalization; the ratio
/// Fbar_k is unchanged (the constant cancels) but sums stay finite even
/// when clamped sentinel values like `f64::MAX` appear among the F's.
pub fn compute_importance(
    pipeline: &FittedPipeline,
    names: &[String],
) -> Result<ImportanceVector> {
    let p = pipeline.pca.components.nrows();
    if names.len() != p {
        return Err(Error::ColumnCountMismatch {
            expected: p,
            got: names.len(),
        });
    }
    let selected = &pipeline.selector.selected;
    if selected.is_empty() {
        return Err(Error::InvalidParameter(
            "importance needs at least one selected component".into(),
        ));
    }

    let f: Vec<f64> = selected
        .iter()
        .map(|&c| {
            pipeline
                .selector
                .f_of(c)
                .expect("selected components survive the variance filter")
        })
        .collect();
    let f_max = f.iter().cloned().fold(0.0_f64, f64::max);
    if f_max <= 0.0 {
        return Ok(ImportanceVector {
            names: names.to_vec(),
            values: vec![100.0 / p as f64; p],
            uniform_fallback: true,
        });
    }

    let f_scaled: Vec<f64> = f.iter().map(|v| v / f_max).collect();
    let f_total: f64 = f_scaled.iter().sum();
    let eigen: Vec<f64> = selected
        .iter()
        .map(|&c| pipeline.pca.eigenvalues[c])
        .collect();
    let eigen_total: f64 = eigen.iter().sum();

    let mut raw = vec![0.0_f64; p];
    for (k, &c) in selected.iter().enumerate() {
        let f_bar = f_scaled[k] / f_total;
        let eigen_bar = eigen[k] / eigen_total;
        let direction = pipeline.pca.components.column(c);
        for i in 0..p {
            raw[i] += (f_bar * eigen_bar * direction[i]).abs();
        }
    }

    let total: f64 = raw.iter().sum();
    let values = raw.iter().map(|v| 100.0 * v / total).collect();
    Ok(ImportanceVector {
        names: names.to_vec(),
        values,
        uniform_fallback: false,
    })
}

/// Ranked extremes of an importance vector. Ties are broken alphabetically
/// by feature name in both directions.
pub fn rank_report(iv: &ImportanceVector, top: usize, bottom: usize) -> Result<RankReport> {
    let p = iv.names.len();
    if top + bottom > p {
        return Err(Error::ReportCountsTooLarge { top, bottom, p });
    }
    let mut pairs: Vec<(String, f64)> = iv
        .names
        .iter()
        .cloned()
        .zip(iv.values.iter().cloned())
        .collect();

    pairs.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
    });
    let top_list = pairs.iter().take(top).cloned().collect();

    pairs.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0))
    });
    let bottom_list = pairs.iter().take(bottom).cloned().collect();

    Ok(RankReport {
        top: top_list,
        bottom: bottom_list,
    })
}

/// Aligned plain-text rendering with two-decimal scores.
pub fn render_rank_report(report: &RankReport) -> String {
    let mut out = String::new();
    let width = report
        .top
        .iter()
        .chain(&report.bottom)
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(7)
        .max("feature".len());
    fn block(out: &mut String, width: usize, title: &str, rows: &[(String, f64)]) {
        if rows.is_empty() {
            return;
        }
        out.push_str(title);
        out.push('\n');
        out.push_str(&format!("  rank  {:<width$}  importance\n", "feature"));
        for (rank, (name, value)) in rows.iter().enumerate() {
            out.push_str(&format!(
                "  {:>4}  {:<width$}  {:.2}\n",
                rank + 1,
                name,
                value
            ));
        }
    }
    block(&mut out, width, "highest importance", &report.top);
    if !report.top.is_empty() && !report.bottom.is_empty() {
        out.push('\n');
    }
    block(&mut out, width, "lowest importance", &report.bottom);
    out
}

/// Full importance vector as CSV in original column order, full precision.
pub fn importance_csv(iv: &ImportanceVector) -> String {
    let mut out = String::from("feature,importance\n");
    for (name, value) in iv.names.iter().zip(&iv.values) {
        out.push_str(&format!("{name},{value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{
        fit_pipeline, PcaState, PipelineConfig, RankChoice, SelectorState, StandardizerState,
    };
    use crate::rng::SeededRng;
    use crate::table::FeatureTable;
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn hand_pipeline(
        components: Array2<f64>,
        eigenvalues: Vec<f64>,
        f_values: Vec<f64>,
        selected: Vec<usize>,
    ) -> FittedPipeline {
        let p = components.nrows();
        let r = components.ncols();
        let k = selected.len();
        FittedPipeline {
            standardizer: StandardizerState {
                mu: Array1::zeros(p),
                sigma: Array1::ones(p),
            },
            pca: PcaState {
                center: Array1::zeros(p),
                components,
                eigenvalues: Array1::from_vec(eigenvalues),
                rank: r,
                rank_fallback: false,
            },
            selector: SelectorState {
                variance_mask: vec![true; r],
                f_values,
                selected,
            },
            k,
        }
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("col{i:02}")).collect()
    }

    #[test]
    fn single_axis_component_lands_all_mass_on_its_feature() {
        // Component 0 points along the third input axis.
        let mut components = Array2::zeros((4, 2));
        components[[2, 0]] = 1.0;
        components[[0, 1]] = 1.0;
        let pipeline = hand_pipeline(components, vec![2.0, 1.0], vec![5.0, 3.0], vec![0]);
        let iv = compute_importance(&pipeline, &names(4)).unwrap();
        assert_eq!(iv.values, vec![0.0, 0.0, 100.0, 0.0]);
        assert!(!iv.uniform_fallback);
    }

    #[test]
    fn symmetric_axis_components_split_mass_evenly() {
        let mut components = Array2::zeros((4, 2));
        components[[0, 0]] = 1.0;
        components[[1, 1]] = 1.0;
        let pipeline = hand_pipeline(components, vec![3.0, 3.0], vec![7.0, 7.0], vec![0, 1]);
        let iv = compute_importance(&pipeline, &names(4)).unwrap();
        assert!((iv.values[0] - 50.0).abs() < 1e-12);
        assert!((iv.values[1] - 50.0).abs() < 1e-12);
        assert_eq!(iv.values[2], 0.0);
        assert_eq!(iv.values[3], 0.0);
    }

    #[test]
    fn matches_direct_recomputation_on_a_fitted_pipeline() {
        let n = 60;
        let p = 10;
        let mut gen = SeededRng::new(4).rng();
        let values = Array2::from_shape_fn((n, p), |_| gen.gen_range(-1.0..1.0));
        let target = Array1::from_shape_fn(n, |i| {
            (0..p).map(|j| values[[i, j]] * (j as f64 - 3.0)).sum::<f64>()
                + gen.gen_range(-0.1..0.1)
        });
        let table = FeatureTable::new(
            "id".into(),
            (0..n).map(|i| i.to_string()).collect(),
            names(p),
            values,
            Some("y".into()),
            Some(target),
        )
        .unwrap();
        let pipeline = fit_pipeline(
            &table,
            &PipelineConfig {
                select_k: 4,
                variance_threshold: 1e-8,
                rank: RankChoice::Full,
            },
        )
        .unwrap();

        let iv = compute_importance(&pipeline, &names(p)).unwrap();

        // Straight recomputation without the max-rescaling shortcut.
        let selected = &pipeline.selector.selected;
        let f: Vec<f64> = selected
            .iter()
            .map(|&c| pipeline.selector.f_of(c).unwrap())
            .collect();
        let f_sum: f64 = f.iter().sum();
        let l: Vec<f64> = selected
            .iter()
            .map(|&c| pipeline.pca.eigenvalues[c])
            .collect();
        let l_sum: f64 = l.iter().sum();
        let mut raw = vec![0.0_f64; p];
        for (k, &c) in selected.iter().enumerate() {
            for i in 0..p {
                raw[i] +=
                    (f[k] / f_sum * (l[k] / l_sum) * pipeline.pca.components[[i, c]]).abs();
            }
        }
        let raw_sum: f64 = raw.iter().sum();

        let mut check_total = 0.0;
        for i in 0..p {
            let expected = 100.0 * raw[i] / raw_sum;
            assert!(
                (iv.values[i] - expected).abs() < 1e-10,
                "column {i}: {} vs {}",
                iv.values[i],
                expected
            );
            assert!(iv.values[i] >= 0.0);
            check_total += iv.values[i];
        }
        assert!((check_total - 100.0).abs() < 1e-6);
    }

    #[test]
    fn scaling_all_f_values_leaves_output_unchanged() {
        let mut gen = SeededRng::new(9).rng();
        let components = Array2::from_shape_fn((6, 3), |_| gen.gen_range(-1.0..1.0));
        let base = hand_pipeline(
            components.clone(),
            vec![5.0, 3.0, 2.0],
            vec![4.0, 1.0, 2.5],
            vec![0, 1, 2],
        );
        let scaled = hand_pipeline(
            components,
            vec![5.0, 3.0, 2.0],
            vec![4.0 * 73.0, 1.0 * 73.0, 2.5 * 73.0],
            vec![0, 1, 2],
        );
        let a = compute_importance(&base, &names(6)).unwrap();
        let b = compute_importance(&scaled, &names(6)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_sentinel_f_values_stay_finite() {
        let mut gen = SeededRng::new(2).rng();
        let components = Array2::from_shape_fn((5, 3), |_| gen.gen_range(-1.0..1.0));
        let pipeline = hand_pipeline(
            components,
            vec![4.0, 2.0, 1.0],
            vec![f64::MAX, f64::MAX, 1.0],
            vec![0, 1, 2],
        );
        let iv = compute_importance(&pipeline, &names(5)).unwrap();
        let total: f64 = iv.values.iter().sum();
        assert!(iv.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((total - 100.0).abs() < 1e-6);
    }

    #[test]
    fn all_zero_f_values_fall_back_to_uniform() {
        let mut components = Array2::zeros((5, 2));
        components[[0, 0]] = 1.0;
        components[[1, 1]] = 1.0;
        let pipeline = hand_pipeline(components, vec![2.0, 1.0], vec![0.0, 0.0], vec![0, 1]);
        let iv = compute_importance(&pipeline, &names(5)).unwrap();
        assert!(iv.uniform_fallback);
        for v in &iv.values {
            assert!((v - 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn name_count_must_match_input_width() {
        let mut components = Array2::zeros((4, 1));
        components[[0, 0]] = 1.0;
        let pipeline = hand_pipeline(components, vec![1.0], vec![1.0], vec![0]);
        assert!(matches!(
            compute_importance(&pipeline, &names(3)),
            Err(Error::ColumnCountMismatch { .. })
        ));
    }

    #[test]
    fn rank_report_orders_and_breaks_ties_alphabetically() {
        let iv = ImportanceVector {
            names: vec!["a".into(), "b".into(), "c".into()],
            values: vec![3.0, 1.0, 2.0],
            uniform_fallback: false,
        };
        let report = rank_report(&iv, 1, 0).unwrap();
        assert_eq!(report.top, vec![("a".to_string(), 3.0)]);
        assert!(report.bottom.is_empty());

        let report = rank_report(&iv, 2, 1).unwrap();
        assert_eq!(report.top[1], ("c".to_string(), 2.0));
        assert_eq!(report.bottom[0], ("b".to_string(), 1.0));

        // Equal values: alphabetical order wins in both directions.
        let tied = ImportanceVector {
            names: vec!["zeta".into(), "alpha".into()],
            values: vec![5.0, 5.0],
            uniform_fallback: false,
        };
        let report = rank_report(&tied, 1, 1).unwrap();
        assert_eq!(report.top[0].0, "alpha");
        assert_eq!(report.bottom[0].0, "alpha");

        assert!(matches!(
            rank_report(&iv, 3, 1),
            Err(Error::ReportCountsTooLarge { .. })
        ));
    }

    #[test]
    fn rendering_uses_two_decimals_and_csv_is_complete() {
        let iv = ImportanceVector {
            names: vec!["pons".into(), "thalamus".into(), "cerebellum".into()],
            values: vec![1.18, 97.5, 1.32],
            uniform_fallback: false,
        };
        let report = rank_report(&iv, 2, 1).unwrap();
        let text = render_rank_report(&report);
        assert!(text.contains("97.50"));
        assert!(text.contains("1.32"));
        assert!(text.contains("1.18"));
        assert!(text.contains("highest importance"));
        assert!(text.contains("lowest importance"));

        let csv = importance_csv(&iv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "feature,importance");
        assert_eq!(lines[1], "pons,1.18");
        assert!(lines[2].starts_with("thalamus,97.5"));
    }
}
