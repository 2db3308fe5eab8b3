use std::collections::BTreeSet;

use benchsubset::linreg::{cross_validated_mse, Design};
use benchsubset::score_table::{FilterConfig, PreparedDataset, TargetStat};
use benchsubset::subset_search::{
    binomial, enumerate_and_score, nested_pipeline, per_game_models, variance_explained,
    PipelineOptions, SearchConfig,
};
use benchsubset::synthetic::{algorithm_names, environment_names, planted_dataset};
use benchsubset::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..m)
        .flat_map(|last| {
            combinations(last, k - 1).into_iter().map(move |mut c| {
                c.push(last);
                c
            })
        })
        .collect()
}

/// Dataset with holes: each cell missing with probability `rate`.
fn ragged(n_alg: usize, n_env: usize, rate: f64, seed: u64) -> PreparedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Option<f64>> = (0..n_alg * n_env)
        .map(|_| (!rng.random_bool(rate)).then(|| rng.random_range(0.0..3.0)))
        .collect();
    let targets = (0..n_alg).map(|_| rng.random_range(0.5..2.5)).collect();
    PreparedDataset::from_parts(
        algorithm_names(n_alg),
        environment_names(n_env),
        cells,
        targets,
        TargetStat::Median,
        FilterConfig::default(),
    )
    .unwrap()
}

fn brute_force(d: &PreparedDataset, k: usize, folds: usize, seed: u64) -> Vec<(f64, Vec<usize>)> {
    let mut out = Vec::new();
    for comb in combinations(d.n_environments(), k) {
        let rows: Vec<usize> = d.complete_rows(&comb).iter().collect();
        if rows.len() < (k + 2).max(folds) {
            continue;
        }
        let data = rows.iter().flat_map(|&a| comb.iter().map(move |&e| d.column(e)[a])).collect();
        let t: Vec<f64> = rows.iter().map(|&a| d.targets()[a]).collect();
        let x = Design::anonymous(k, data).unwrap();
        if let Ok(mse) = cross_validated_mse(&x, &t, folds, seed, false) {
            out.push((mse, comb));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[test]
fn matches_brute_force_ranking() {
    let d = ragged(45, 9, 0.15, 11);
    let mut config = SearchConfig::new(3);
    config.top_k = 20;
    config.seed = 5;
    let result = enumerate_and_score(&d, &config).unwrap();
    let oracle = brute_force(&d, 3, 10, 5);
    assert_eq!(result.stats.scored as usize, oracle.len());
    for (r, (mse, comb)) in result.ranked.iter().zip(&oracle) {
        assert_eq!(r.cv_mse, *mse);
        let names: Vec<String> = comb.iter().map(|&e| d.environment_ids()[e].clone()).collect();
        assert_eq!(r.environments, names);
    }
}

#[test]
fn every_candidate_is_accounted_for() {
    let d = ragged(30, 10, 0.3, 3);
    let result = enumerate_and_score(&d, &SearchConfig::new(4)).unwrap();
    let s = result.stats;
    assert_eq!(s.total, binomial(10, 4));
    assert_eq!(s.scored + s.skipped_too_few_algorithms + s.skipped_singular, s.total);
    assert!(s.skipped_too_few_algorithms > 0);
}

#[test]
fn singular_candidates_are_counted_not_fatal() {
    // e02 duplicates e01, so any subset holding both is rank deficient.
    let base = planted_dataset(40, 5, &[(0, 1.0)], 0.05, 1).unwrap();
    let mut cells = Vec::new();
    for a in 0..40 {
        for e in 0..5 {
            let src = if e == 2 { 1 } else { e };
            cells.push(base.log_score(a, src));
        }
    }
    let d = PreparedDataset::from_parts(
        base.algorithm_ids().to_vec(),
        base.environment_ids().to_vec(),
        cells,
        base.targets().to_vec(),
        TargetStat::Median,
        FilterConfig::default(),
    )
    .unwrap();
    let result = enumerate_and_score(&d, &SearchConfig::new(2)).unwrap();
    assert_eq!(result.stats.skipped_singular, 1);
    assert_eq!(result.stats.scored, 9);
}

#[test]
fn empty_search_reports_counts() {
    let d = ragged(12, 5, 0.0, 4);
    match enumerate_and_score(&d, &SearchConfig::new(2)) {
        Ok(r) => assert!(r.stats.scored > 0),
        Err(e) => panic!("{e}"),
    }
    let tiny = ragged(8, 5, 0.0, 4);
    match enumerate_and_score(&tiny, &SearchConfig::new(2)).unwrap_err() {
        Error::EmptySearch { total, too_few_algorithms, .. } => assert_eq!((total, too_few_algorithms), (10, 10)),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn include_and_exclude_are_honoured() {
    let d = planted_dataset(50, 8, &[(1, 0.5), (4, 0.5)], 0.02, 9).unwrap();
    let mut config = SearchConfig::new(3);
    config.must_include = vec!["e06".into()];
    config.exclude = vec!["e04".into()];
    config.top_k = 30;
    let r = enumerate_and_score(&d, &config).unwrap();
    assert_eq!(r.stats.total, binomial(6, 2));
    for s in &r.ranked {
        assert!(s.environments.contains(&"e06".to_string()));
        assert!(!s.environments.contains(&"e04".to_string()));
    }
    config.exclude = vec!["e06".into()];
    assert!(enumerate_and_score(&d, &config).is_err());
}

#[test]
fn thread_count_does_not_change_results() {
    let d = ragged(60, 14, 0.1, 21);
    let mut config = SearchConfig::new(4);
    config.top_k = 50;
    config.threads = 1;
    let one = enumerate_and_score(&d, &config).unwrap();
    for threads in [2, 5, 12] {
        config.threads = threads;
        let many = enumerate_and_score(&d, &config).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.to_csv(), many.to_csv());
    }
}

#[test]
fn ranking_is_sorted_and_ties_break_by_name() {
    // Two identical columns tie exactly; the lexicographically smaller set wins.
    let base = planted_dataset(40, 4, &[(3, 1.0)], 0.05, 2).unwrap();
    let mut cells = Vec::new();
    for a in 0..40 {
        for e in 0..4 {
            cells.push(base.log_score(a, if e == 0 { 3 } else { e }));
        }
    }
    let d = PreparedDataset::from_parts(
        base.algorithm_ids().to_vec(),
        vec!["zeta".into(), "beta".into(), "gamma".into(), "alpha".into()],
        cells,
        base.targets().to_vec(),
        TargetStat::Median,
        FilterConfig::default(),
    )
    .unwrap();
    let mut config = SearchConfig::new(1);
    config.top_k = 4;
    let r = enumerate_and_score(&d, &config).unwrap();
    assert_eq!(r.ranked[0].cv_mse, r.ranked[1].cv_mse);
    assert_eq!(r.ranked[0].environments, vec!["alpha".to_string()]);
    assert_eq!(r.ranked[1].environments, vec!["zeta".to_string()]);
    assert!(r.ranked.windows(2).all(|w| w[0].cv_mse <= w[1].cv_mse));
}

#[test]
fn planted_subset_is_recovered() {
    let d = planted_dataset(60, 12, &[(2, 0.4), (5, 0.5), (9, 0.1)], 0.02, 17).unwrap();
    let r = enumerate_and_score(&d, &SearchConfig::new(3)).unwrap();
    assert_eq!(r.best().environments, vec!["e02", "e05", "e09"]);
    let m = &r.best().model;
    assert!(m.intercept.is_none());
    assert!((m.coefficients[0] - 0.4).abs() < 0.02);
    assert!(m.stats.r_squared > 0.99);
}

#[test]
fn nested_pipeline_respects_nesting() {
    let d = planted_dataset(60, 16, &[(1, 0.3), (4, 0.3), (7, 0.2), (10, 0.1), (13, 0.1)], 0.03, 5).unwrap();
    let suite = nested_pipeline(&d, PipelineOptions::default()).unwrap();
    suite.check_invariants().unwrap();
    let set = |n: &str| -> BTreeSet<String> { suite.get(n).unwrap().environment_ids.iter().cloned().collect() };
    assert_eq!(set("size-5").len(), 5);
    assert_eq!(set("size-10").len(), 10);
    assert_eq!(set("val-5").len(), 5);
    let planted: BTreeSet<String> = ["e01", "e04", "e07", "e10", "e13"].iter().map(|s| s.to_string()).collect();
    assert_eq!(set("size-5"), planted);
    // Deterministic across runs and worker counts.
    let again = nested_pipeline(&d, PipelineOptions { threads: 3, ..Default::default() }).unwrap();
    assert_eq!(suite.to_json().unwrap(), again.to_json().unwrap());
}

#[test]
fn nested_pipeline_needs_fifteen_environments() {
    let d = planted_dataset(40, 6, &[(1, 1.0)], 0.03, 5).unwrap();
    let err = nested_pipeline(&d, PipelineOptions::default()).unwrap_err();
    assert!(err.to_string().contains("15"), "{err}");
}

#[test]
fn per_game_bank_and_variance_explained() {
    let d = ragged(50, 8, 0.05, 8);
    let subset = vec!["e01".to_string(), "e03".to_string()];
    let bank = per_game_models(&d, &subset).unwrap();
    assert_eq!(bank.models.len(), 8);
    let id = bank.get("e03").unwrap().model.as_ref().unwrap();
    assert_eq!(id.coefficients, vec![0.0, 1.0]);
    assert_eq!(id.predict_row(&[0.7, 1.3]), 1.3);
    for gm in &bank.models {
        let m = gm.model.as_ref().unwrap();
        assert!(m.intercept.is_some());
        assert!((0.0..=1.0 + 1e-12).contains(&m.stats.r_squared));
    }
    let ve = variance_explained(&bank, &d).unwrap();
    assert!(ve.fraction > 0.0 && ve.fraction < 1.0, "{}", ve.fraction);
    assert_eq!(ve.environments_used, 8);

    // A game correlated with the subset is explained better than noise.
    let full = planted_dataset(50, 6, &[(0, 1.0)], 0.01, 3).unwrap();
    let bank = per_game_models(&full, &["e00".to_string()]).unwrap();
    assert!(variance_explained(&bank, &full).unwrap().fraction >= 1.0 / 6.0 - 1e-12);
}

#[test]
fn refit_model_carries_cv_and_checksums() {
    let d = planted_dataset(40, 6, &[(1, 1.0)], 0.05, 1).unwrap();
    let r = enumerate_and_score(&d, &SearchConfig::new(2)).unwrap();
    let m = &r.best().model;
    assert_eq!(m.stats.cv_mse, Some(r.best().cv_mse));
    assert_eq!(m.stats.n_algorithms, 40);
    let csv = r.to_csv();
    assert!(csv.starts_with("rank,cv_mse,n_algorithms,environments,coefficients\n"));
}
