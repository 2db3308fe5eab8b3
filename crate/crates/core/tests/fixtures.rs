use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use benchsubset::fixtures::{
    atari10_bank, atari5_bank, case_study, model_files, normalization_sha256, normalization_table,
    published_model, reference_subsets, ATARI10_BANK_INPUTS,
};
use benchsubset::manifest::file_sha256;
use benchsubset::predictor::{inversion_count, rebase_scores, relative_error, PredictionReport};
use benchsubset::score_table::{log_transform, load_scores, NormalizationTable};
use benchsubset::subset_search::ModelBank;
use benchsubset::LinearModel;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn shipped_model_files_are_current() {
    for (name, json) in model_files().unwrap() {
        let on_disk = fs::read_to_string(fixture("models").join(&name)).unwrap();
        assert_eq!(on_disk.trim_end(), json, "{name} is stale; rerun the write_fixtures example");
    }
    let m = LinearModel::load(fixture("models/atari-5.json")).unwrap();
    assert_eq!(m, published_model("atari-5").unwrap());
    let bank = ModelBank::from_json(&fs::read_to_string(fixture("models/atari-10-bank.json")).unwrap()).unwrap();
    assert_eq!(bank.to_json().unwrap(), atari10_bank().to_json().unwrap());
}

#[test]
fn embedded_table_equals_file() {
    assert_eq!(file_sha256(fixture("normalization.csv")).unwrap(), normalization_sha256());
    let from_file = NormalizationTable::load(fixture("normalization.csv")).unwrap();
    assert_eq!(from_file.checksum(), normalization_table().checksum());
}

#[test]
fn anchors_are_exact() {
    for (_, e) in normalization_table().iter() {
        assert_eq!(e.normalize(e.random), 0.0);
        assert_eq!(e.normalize(e.human), 100.0);
    }
}

#[test]
fn atari3_on_unit_inputs() {
    let m = published_model("atari-3").unwrap();
    let v = m.predict_row(&[1.0, 1.0, 1.0]);
    assert!((v - 0.9854).abs() < 1e-4, "{v}");
}

#[test]
fn bank_identity_rows_reproduce_inputs() {
    let bank = atari5_bank();
    let x = [0.3, 1.7, 2.2, 0.0, 3.1];
    for (i, name) in bank.subset.iter().enumerate() {
        let m = bank.get(name).unwrap().model.as_ref().unwrap();
        assert_eq!(m.predict_row(&x), x[i], "{name}");
    }
    let bank10 = atari10_bank();
    assert_eq!(bank10.subset.len(), ATARI10_BANK_INPUTS.len());
    let x10: Vec<f64> = (0..10).map(|i| 0.25 * i as f64).collect();
    for (i, name) in bank10.subset.iter().enumerate() {
        assert_eq!(bank10.get(name).unwrap().model.as_ref().unwrap().predict_row(&x10), x10[i]);
    }
}

#[test]
fn reference_subsets_resolve() {
    let subsets: BTreeMap<_, _> = reference_subsets().into_iter().collect();
    assert_eq!(subsets["DQN-7"].len(), 7);
}

fn case_reports() -> Vec<PredictionReport> {
    case_study()
        .into_iter()
        .map(|r| PredictionReport {
            algorithm_id: r.algorithm,
            predicted_summary: r.prediction,
            predicted_log: log_transform(r.prediction),
            below_zero: false,
            true_summary: Some(r.median),
            relative_error: relative_error(r.median, r.prediction).ok(),
            inputs_used: BTreeMap::new(),
        })
        .collect()
}

#[test]
fn case_study_reproduces_published_figures() {
    let rows = case_study();
    let reports = case_reports();
    let rebased = rebase_scores(&reports, "Rainbow").unwrap();
    for ((row, rep), reb) in rows.iter().zip(&reports).zip(&rebased) {
        let pct = 100.0 * rep.relative_error.unwrap().abs();
        assert!((pct - row.published_rel_error_pct).abs() <= 0.1, "{} {pct}", row.algorithm);
        let pct = 100.0 * reb.relative_error.unwrap().abs();
        assert!((pct - row.published_rebased_rel_error_pct).abs() <= 0.1, "{} {pct}", row.algorithm);
        assert!((reb.true_summary.unwrap() - row.published_rebased_median).abs() <= 0.005);
        assert!((reb.predicted_summary - row.published_rebased_prediction).abs() <= 0.005);
        assert_eq!(row.median.round(), row.published_median);
        assert_eq!(row.prediction.round(), row.published_prediction);
    }
    let by_truth = ["Rainbow", "C2D", "IQN", "C51"];
    let by_pred = ["Rainbow", "C2D", "C51", "IQN"];
    assert_eq!(inversion_count(&by_truth, &by_pred).unwrap(), 1);
    assert_eq!(benchsubset::predictor::truth_prediction_inversions(&reports).unwrap(), 1);
}

#[test]
fn demo_scores_load_and_match_generator() {
    use benchsubset::synthetic::{demo_raw_table, DemoConfig};
    let on_disk = load_scores(fixture("demo_scores.csv")).unwrap();
    let generated = demo_raw_table(&normalization_table(), DemoConfig::default()).unwrap();
    assert_eq!(fs::read_to_string(fixture("demo_scores.csv")).unwrap(), generated.to_csv().unwrap());
    assert_eq!(on_disk.algorithm_ids(), generated.algorithm_ids());
}
