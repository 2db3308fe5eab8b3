//! End-to-end prediction from raw scores, and the error metrics used to
//! judge it.
//!
//! Raw score → normalized (per-environment affine map) → log transform →
//! linear model → inverse log transform. Predictions are never clipped: a
//! model with an intercept can return a value in (−1, 0), which is flagged.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::LinearModel;
use crate::names::canonical_key;
use crate::score_table::{inverse_log_transform, log_transform, NormalizationTable, PreparedDataset};

/// Below this magnitude a true value cannot anchor a relative error.
pub const MIN_RELATIVE_DENOMINATOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Normalized-score units.
    pub value: f64,
    pub log_value: f64,
    pub below_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub algorithm_id: String,
    pub predicted_summary: f64,
    pub predicted_log: f64,
    pub below_zero: bool,
    pub true_summary: Option<f64>,
    pub relative_error: Option<f64>,
    pub inputs_used: BTreeMap<String, f64>,
}

impl PredictionReport {
    pub fn abs_relative_error(&self) -> Option<f64> {
        self.relative_error.map(f64::abs)
    }
}

/// Look up `name` in `raw` by canonical key.
fn find<'a>(raw: &'a BTreeMap<String, f64>, name: &str) -> Option<(&'a String, f64)> {
    let key = canonical_key(name);
    raw.iter()
        .find(|(k, _)| canonical_key(k) == key)
        .map(|(k, &v)| (k, v))
}

/// Apply `model` to raw (unnormalized) scores.
pub fn predict_summary(
    model: &LinearModel,
    raw_scores: &BTreeMap<String, f64>,
    norms: &NormalizationTable,
) -> Result<Prediction> {
    let mut log_value = model.intercept_value();
    for (env, &coef) in model.environment_ids.iter().zip(&model.coefficients) {
        let (_, raw) = find(raw_scores, env).ok_or_else(|| Error::MissingInput {
            environment: env.clone(),
        })?;
        if !raw.is_finite() {
            return Err(Error::invalid(format!("non-finite score for {env:?}")));
        }
        let z = norms.normalize_score(env, raw)?;
        log_value += coef * log_transform(z);
    }
    let value = inverse_log_transform(log_value);
    Ok(Prediction {
        value,
        log_value,
        below_zero: value < 0.0,
    })
}

/// Predict for one algorithm and attach the error against `true_summary`
/// when the denominator allows it.
pub fn predict_report(
    model: &LinearModel,
    algorithm_id: &str,
    raw_scores: &BTreeMap<String, f64>,
    norms: &NormalizationTable,
    true_summary: Option<f64>,
) -> Result<PredictionReport> {
    let p = predict_summary(model, raw_scores, norms)?;
    let inputs_used = model
        .environment_ids
        .iter()
        .filter_map(|e| find(raw_scores, e).map(|(_, v)| (e.clone(), v)))
        .collect();
    Ok(PredictionReport {
        algorithm_id: algorithm_id.to_string(),
        predicted_summary: p.value,
        predicted_log: p.log_value,
        below_zero: p.below_zero,
        true_summary,
        relative_error: true_summary.and_then(|t| relative_error(t, p.value).ok()),
        inputs_used,
    })
}

/// Reports for every algorithm of a prepared dataset that has all of the
/// model's inputs, with the dataset target as truth. Works on log scores
/// directly, so `inputs_used` is left empty. Algorithms lacking an input are
/// returned by id in the second list.
pub fn dataset_reports(
    model: &LinearModel,
    dataset: &PreparedDataset,
) -> Result<(Vec<PredictionReport>, Vec<String>)> {
    let envs = dataset.resolve(&model.environment_ids)?;
    let rows = dataset.complete_rows(&envs);
    let mut reports = Vec::with_capacity(rows.count());
    let mut skipped = Vec::new();
    let mut x = vec![0.0; envs.len()];
    for a in 0..dataset.n_algorithms() {
        let id = dataset.algorithm_ids()[a].clone();
        if !rows.contains(a) {
            skipped.push(id);
            continue;
        }
        for (xi, &e) in x.iter_mut().zip(&envs) {
            *xi = dataset.column(e)[a];
        }
        let log_value = model.predict_row(&x);
        let value = inverse_log_transform(log_value);
        let truth = inverse_log_transform(dataset.targets()[a]);
        reports.push(PredictionReport {
            algorithm_id: id,
            predicted_summary: value,
            predicted_log: log_value,
            below_zero: value < 0.0,
            true_summary: Some(truth),
            relative_error: relative_error(truth, value).ok(),
            inputs_used: BTreeMap::new(),
        });
    }
    Ok((reports, skipped))
}

/// Signed `(predicted − true) / true`.
pub fn relative_error(true_value: f64, predicted: f64) -> Result<f64> {
    if !(true_value.abs() > MIN_RELATIVE_DENOMINATOR) {
        return Err(Error::UndefinedRelativeError(true_value));
    }
    Ok((predicted - true_value) / true_value)
}

/// Relative error implied by a mean absolute residual in base-`log_base`
/// log space: `ln(log_base) · mae_log`.
pub fn approx_relative_error_from_log_mae(mae_log: f64, log_base: f64) -> f64 {
    log_base.ln() * mae_log
}

/// Number of pairs ordered differently by the two rankings.
pub fn inversion_count<S: AsRef<str>>(order_a: &[S], order_b: &[S]) -> Result<usize> {
    let pos_b: BTreeMap<&str, usize> = order_b
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_ref(), i))
        .collect();
    let set_a: BTreeSet<&str> = order_a.iter().map(AsRef::as_ref).collect();
    if pos_b.len() != order_b.len() || set_a.len() != order_a.len() {
        return Err(Error::invalid("rankings contain duplicate entries"));
    }
    if set_a.len() != pos_b.len() || !set_a.iter().all(|s| pos_b.contains_key(s)) {
        return Err(Error::invalid("rankings are not over the same set"));
    }
    let seq: Vec<usize> = order_a.iter().map(|s| pos_b[s.as_ref()]).collect();
    let mut count = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            count += usize::from(seq[i] > seq[j]);
        }
    }
    Ok(count)
}

/// Algorithm ids sorted by `key` descending; ties by id.
pub fn ranking_by(reports: &[PredictionReport], key: impl Fn(&PredictionReport) -> f64) -> Vec<String> {
    let mut order: Vec<&PredictionReport> = reports.iter().collect();
    order.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.algorithm_id.cmp(&b.algorithm_id)));
    order.into_iter().map(|r| r.algorithm_id.clone()).collect()
}

/// Inversions between the truth ordering and the prediction ordering over
/// reports that carry a true summary.
pub fn truth_prediction_inversions(reports: &[PredictionReport]) -> Result<usize> {
    let with_truth: Vec<PredictionReport> = reports
        .iter()
        .filter(|r| r.true_summary.is_some())
        .cloned()
        .collect();
    let by_truth = ranking_by(&with_truth, |r| r.true_summary.unwrap_or(f64::NAN));
    let by_pred = ranking_by(&with_truth, |r| r.predicted_summary);
    inversion_count(&by_truth, &by_pred)
}

/// Divide every summary by the baseline algorithm's, recomputing relative
/// errors on the ratios.
pub fn rebase_scores(reports: &[PredictionReport], baseline_algorithm: &str) -> Result<Vec<PredictionReport>> {
    let base = reports
        .iter()
        .find(|r| r.algorithm_id == baseline_algorithm)
        .ok_or_else(|| Error::invalid(format!("baseline {baseline_algorithm:?} not among the reports")))?;
    let base_pred = base.predicted_summary;
    if base_pred.abs() <= MIN_RELATIVE_DENOMINATOR {
        return Err(Error::invalid("baseline prediction is zero"));
    }
    let base_true = match base.true_summary {
        Some(t) if t.abs() > MIN_RELATIVE_DENOMINATOR => Some(t),
        Some(_) => return Err(Error::invalid("baseline true summary is zero")),
        None => None,
    };
    Ok(reports
        .iter()
        .map(|r| {
            let predicted = r.predicted_summary / base_pred;
            let truth = match (r.true_summary, base_true) {
                (Some(t), Some(b)) => Some(t / b),
                _ => None,
            };
            PredictionReport {
                predicted_summary: predicted,
                predicted_log: log_transform(predicted),
                true_summary: truth,
                relative_error: truth.and_then(|t| relative_error(t, predicted).ok()),
                ..r.clone()
            }
        })
        .collect())
}

/// Per-run CSV: `algorithm,predicted,true,rel_error,abs_rel_error`; absent
/// values are empty cells.
pub fn reports_to_csv(reports: &[PredictionReport]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("algorithm,predicted,true,rel_error,abs_rel_error\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.algorithm_id,
            r.predicted_summary,
            opt(r.true_summary),
            opt(r.relative_error),
            opt(r.abs_relative_error())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score_table::NormEntry;

    fn norms() -> NormalizationTable {
        NormalizationTable::new(vec![
            ("NameThisGame".into(), NormEntry { random: 2292.3, human: 8049.0 }),
            ("Pong".into(), NormEntry { random: -20.7, human: 14.6 }),
        ])
        .unwrap()
    }

    #[test]
    fn random_scores_predict_zero() {
        let m = LinearModel::from_coefficients(vec!["NameThisGame".into(), "Pong".into()], vec![0.6, 0.7], None)
            .unwrap();
        let raw = BTreeMap::from([("NameThisGame".to_string(), 2292.3), ("Pong".to_string(), -20.7)]);
        let p = predict_summary(&m, &raw, &norms()).unwrap();
        assert_eq!(p.value, 0.0);
        assert!(!p.below_zero);
    }

    #[test]
    fn single_game_model_hand_value() {
        let m = LinearModel::from_coefficients(vec!["NameThisGame".into()], vec![0.9976], None).unwrap();
        let raw99 = 2292.3 + 0.99 * (8049.0 - 2292.3);
        let raw = BTreeMap::from([("Name This Game".to_string(), raw99)]);
        let p = predict_summary(&m, &raw, &norms()).unwrap();
        let expected = 10f64.powf(0.9976 * 100f64.log10()) - 1.0;
        assert!((p.value - expected).abs() < 1e-9);
        assert!((p.value - 97.90).abs() < 0.01);
    }

    #[test]
    fn missing_input_names_environment() {
        let m = LinearModel::from_coefficients(vec!["Pong".into()], vec![1.0], None).unwrap();
        let err = predict_summary(&m, &BTreeMap::new(), &norms()).unwrap_err();
        assert!(matches!(err, Error::MissingInput { environment } if environment == "Pong"));
    }

    #[test]
    fn relative_errors() {
        assert!((relative_error(2041.0, 2091.0).unwrap() - 0.0245).abs() < 1e-4);
        assert_eq!(relative_error(5.0, 5.0).unwrap(), 0.0);
        assert!((relative_error(147.0, 118.0).unwrap() + 0.197).abs() < 1e-3);
        assert!(relative_error(0.0, 1.0).is_err());
    }

    #[test]
    fn log_mae_conversion() {
        let mae = 0.104 / 10f64.ln();
        assert!((approx_relative_error_from_log_mae(mae, 10.0) - 0.104).abs() < 1e-12);
        assert_eq!(approx_relative_error_from_log_mae(0.0, 10.0), 0.0);
        let delta = (111f64 / 101.0).log10();
        assert!((delta - 0.04097).abs() < 1e-4);
        assert!((approx_relative_error_from_log_mae(delta, 10.0) - 0.0943).abs() < 2e-4);
        assert!(((110.0 - 100.0) / 101.0 - 0.0990f64).abs() < 1e-4);
    }

    #[test]
    fn inversions() {
        let a = ["w", "x", "y", "z"];
        assert_eq!(inversion_count(&a, &a).unwrap(), 0);
        assert_eq!(inversion_count(&a, &["z", "y", "x", "w"]).unwrap(), 6);
        assert_eq!(inversion_count(&a, &["x", "w", "y", "z"]).unwrap(), 1);
        assert!(inversion_count(&a, &["w", "x", "y", "q"]).is_err());
        assert!(inversion_count(&a, &["w", "x", "y"]).is_err());
    }

    fn report(id: &str, pred: f64, truth: f64) -> PredictionReport {
        PredictionReport {
            algorithm_id: id.into(),
            predicted_summary: pred,
            predicted_log: log_transform(pred),
            below_zero: false,
            true_summary: Some(truth),
            relative_error: relative_error(truth, pred).ok(),
            inputs_used: BTreeMap::new(),
        }
    }

    #[test]
    fn rebasing() {
        let reports = vec![report("C2D", 111.0, 133.0), report("Rainbow", 118.0, 147.0)];
        let rebased = rebase_scores(&reports, "Rainbow").unwrap();
        assert!((rebased[0].true_summary.unwrap() - 0.90).abs() < 0.005);
        assert!((rebased[0].predicted_summary - 0.94).abs() < 0.005);
        assert_eq!(rebased[1].true_summary, Some(1.0));
        assert_eq!(rebased[1].predicted_summary, 1.0);
        assert!(rebase_scores(&reports, "DQN").is_err());

        let same = vec![report("a", 3.0, 3.0), report("b", 3.0, 3.0)];
        for r in rebase_scores(&same, "a").unwrap() {
            assert_eq!((r.predicted_summary, r.true_summary), (1.0, Some(1.0)));
        }
    }
}
