//! Shipped reference data, embedded at compile time.
//!
//! The normalization table, the published subset coefficients, the
//! published per-game model banks, reference subsets, genre labels and the
//! case-study numbers. Environment names are mapped to the normalization
//! table's spelling on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::LinearModel;
use crate::manifest::sha256_hex;
use crate::score_table::NormalizationTable;
use crate::structure_analysis::Categories;
use crate::subset_search::{GameModel, ModelBank};

pub const NORMALIZATION_CSV: &str = include_str!("../fixtures/normalization.csv");
pub const CATEGORIES_CSV: &str = include_str!("../fixtures/categories.csv");
pub const REFERENCE_SUBSETS_CSV: &str = include_str!("../fixtures/reference_subsets.csv");
pub const CASE_STUDY_CSV: &str = include_str!("../fixtures/case_study.csv");
pub const ATARI5_GAME_MODELS_CSV: &str = include_str!("../fixtures/atari5_game_models.csv");
pub const ATARI10_GAME_MODELS_CSV: &str = include_str!("../fixtures/atari10_game_models.csv");

/// Published subset coefficients (no intercept), in the order printed.
const SUBSET_MODELS: &[(&str, &[(&str, f64)])] = &[
    ("atari-1", &[("NameThisGame", 0.9976)]),
    (
        "atari-3",
        &[("BattleZone", 0.3706), ("NameThisGame", 0.5133), ("Phoenix", 0.1015)],
    ),
    (
        "atari-5",
        &[
            ("BattleZone", 0.3820),
            ("DoubleDunk", 0.0679),
            ("NameThisGame", 0.3108),
            ("Phoenix", 0.1241),
            ("Qbert", 0.0805),
        ],
    ),
    (
        "atari-10",
        &[
            ("Amidar", 0.0825),
            ("Bowling", 0.0559),
            ("Frostbite", 0.0691),
            ("KungFuMaster", 0.0986),
            ("RiverRaid", 0.0486),
            ("BattleZone", 0.1888),
            ("DoubleDunk", 0.0852),
            ("NameThisGame", 0.1287),
            ("Phoenix", 0.1643),
            ("Qbert", 0.0592),
        ],
    ),
    (
        "atari-3-val",
        &[("Assault", 0.3353), ("MsPacman", 0.4236), ("YarsRevenge", 0.1916)],
    ),
    (
        "atari-5-val",
        &[
            ("BankHeist", 0.1072),
            ("VideoPinball", 0.0959),
            ("Assault", 0.2234),
            ("MsPacman", 0.2943),
            ("YarsRevenge", 0.2239),
        ],
    ),
];

/// Published in-sample R² and approximate relative error of the subsets.
pub const PUBLISHED_SUBSET_STATS: &[(&str, f64, f64)] = &[
    ("atari-1", 0.864, 0.274),
    ("atari-3", 0.976, 0.137),
    ("atari-5", 0.984, 0.104),
    ("atari-10", 0.992, 0.072),
    ("atari-3-val", 0.952, 0.171),
    ("atari-5-val", 0.972, 0.143),
    ("dqn-7", 0.756, 0.389),
];

pub const SUBSET_MODEL_NAMES: [&str; 6] = [
    "atari-1",
    "atari-3",
    "atari-5",
    "atari-10",
    "atari-3-val",
    "atari-5-val",
];

/// Input columns of the per-game banks, in printed order.
pub const ATARI5_BANK_INPUTS: [&str; 5] = ["BattleZone", "DoubleDunk", "NameThisGame", "Phoenix", "Qbert"];
pub const ATARI10_BANK_INPUTS: [&str; 10] = [
    "Amidar",
    "Bowling",
    "Frostbite",
    "KungFuMaster",
    "RiverRaid",
    "BattleZone",
    "DoubleDunk",
    "NameThisGame",
    "Phoenix",
    "Qbert",
];

pub fn normalization_table() -> NormalizationTable {
    NormalizationTable::parse(NORMALIZATION_CSV.as_bytes(), Path::new("fixtures/normalization.csv"))
        .expect("embedded normalization table is valid")
}

pub fn normalization_sha256() -> String {
    sha256_hex(NORMALIZATION_CSV.as_bytes())
}

fn spelled(norms: &NormalizationTable, name: &str) -> Result<String> {
    norms
        .lookup(name)
        .map(|(n, _)| n.to_string())
        .ok_or_else(|| Error::UnknownEnvironment(name.to_string()))
}

/// One of [`SUBSET_MODEL_NAMES`].
pub fn published_model(name: &str) -> Result<LinearModel> {
    let norms = normalization_table();
    let (_, terms) = SUBSET_MODELS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::invalid(format!("no published model named {name:?}")))?;
    let envs = terms.iter().map(|(e, _)| spelled(&norms, e)).collect::<Result<Vec<_>>>()?;
    let coefs = terms.iter().map(|(_, c)| *c).collect();
    let mut model = LinearModel::from_coefficients(envs, coefs, None)?.with_name(name);
    if let Some((_, r2, _)) = PUBLISHED_SUBSET_STATS.iter().find(|(n, ..)| *n == name) {
        model.stats.r_squared = *r2;
    }
    model.norms_sha256 = Some(normalization_sha256());
    Ok(model)
}

pub fn published_models() -> Vec<LinearModel> {
    SUBSET_MODEL_NAMES
        .iter()
        .map(|n| published_model(n).expect("embedded model is valid"))
        .collect()
}

fn parse_bank(csv_text: &str, inputs: &[&str]) -> Result<ModelBank> {
    let norms = normalization_table();
    let subset = inputs.iter().map(|e| spelled(&norms, e)).collect::<Result<Vec<_>>>()?;
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let mut models = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::invalid(e.to_string()))?;
        let environment = spelled(&norms, &record[0])?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| Error::invalid(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != inputs.len() + 1 {
            return Err(Error::invalid(format!("row for {environment:?} has wrong width")));
        }
        let mut model =
            LinearModel::from_coefficients(subset.clone(), values[1..].to_vec(), Some(values[0]))?
                .with_name(environment.clone());
        model.norms_sha256 = Some(normalization_sha256());
        models.push(GameModel {
            environment,
            model: Some(model),
            n_algorithms: 0,
            note: None,
        });
    }
    Ok(ModelBank { subset, models })
}

/// Published per-game models on the Atari-5 inputs.
pub fn atari5_bank() -> ModelBank {
    parse_bank(ATARI5_GAME_MODELS_CSV, &ATARI5_BANK_INPUTS).expect("embedded bank is valid")
}

/// Published per-game models on the Atari-10 inputs.
pub fn atari10_bank() -> ModelBank {
    parse_bank(ATARI10_GAME_MODELS_CSV, &ATARI10_BANK_INPUTS).expect("embedded bank is valid")
}

/// Named subsets from earlier work, `(name, environments)`.
pub fn reference_subsets() -> Vec<(String, Vec<String>)> {
    let norms = normalization_table();
    let mut rdr = csv::Reader::from_reader(REFERENCE_SUBSETS_CSV.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.expect("embedded csv is valid");
            let envs = r[1]
                .split(';')
                .map(|e| spelled(&norms, e).expect("reference environment is in the table"))
                .collect();
            (r[0].to_string(), envs)
        })
        .collect()
}

pub fn categories() -> Categories {
    Categories::parse(CATEGORIES_CSV.as_bytes(), Path::new("fixtures/categories.csv"))
        .expect("embedded categories are valid")
}

/// One algorithm of the four-algorithm case study. `published_*` are the
/// printed (rounded) figures; `median` and `prediction` are unrounded values
/// consistent with every printed figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyRow {
    pub algorithm: String,
    pub published_median: f64,
    pub published_prediction: f64,
    pub published_rel_error_pct: f64,
    pub published_rebased_median: f64,
    pub published_rebased_prediction: f64,
    pub published_rebased_rel_error_pct: f64,
    pub median: f64,
    pub prediction: f64,
}

pub fn case_study() -> Vec<CaseStudyRow> {
    csv::Reader::from_reader(CASE_STUDY_CSV.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("embedded case study is valid")
}

/// Pre-serialized model files shipped under `fixtures/models/`, as
/// `(file name, JSON)`.
pub fn model_files() -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    for m in published_models() {
        files.push((format!("{}.json", m.name.clone().unwrap_or_default()), m.to_json()?));
    }
    files.push(("atari-5-bank.json".into(), atari5_bank().to_json()?));
    files.push(("atari-10-bank.json".into(), atari10_bank().to_json()?));
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_parses() {
        assert_eq!(normalization_table().len(), 57);
        assert_eq!(published_models().len(), 6);
        assert_eq!(atari5_bank().models.len(), 57);
        assert_eq!(atari10_bank().models.len(), 57);
        assert_eq!(case_study().len(), 4);
        assert!(reference_subsets().iter().any(|(n, e)| n == "DQN-7" && e.len() == 7));
        assert_eq!(categories().len(), 57);
    }

    #[test]
    fn model_names_use_table_spelling() {
        let m = published_model("atari-5").unwrap();
        let norms = normalization_table();
        for e in &m.environment_ids {
            assert_eq!(norms.lookup(e).unwrap().0, e);
        }
    }
}
