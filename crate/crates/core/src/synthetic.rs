//! Seeded synthetic data for tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::score_table::{
    inverse_log_transform, FilterConfig, NormalizationTable, PreparedDataset, RawScoreTable,
    TargetStat,
};

/// Environment names `e00`, `e01`, ...
pub fn environment_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("e{i:02}")).collect()
}

pub fn algorithm_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("agent-{i:03}")).collect()
}

/// Row-major log scores from a one-factor skill model: a shared per-algorithm
/// skill plus independent per-cell noise, floored at 0.
pub fn skill_log_scores(n_alg: usize, n_env: usize, rng: &mut impl Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, 0.5).expect("valid sigma");
    let mut out = Vec::with_capacity(n_alg * n_env);
    for _ in 0..n_alg {
        let skill: f64 = rng.random_range(0.0..2.0);
        for _ in 0..n_env {
            out.push((1.0 + 0.6 * skill + noise.sample(rng)).max(0.0));
        }
    }
    out
}

/// Complete dataset whose target is `Σ w·e_i + N(0, sigma)` over the planted
/// `(environment index, weight)` terms.
pub fn planted_dataset(
    n_alg: usize,
    n_env: usize,
    planted: &[(usize, f64)],
    sigma: f64,
    seed: u64,
) -> Result<PreparedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = skill_log_scores(n_alg, n_env, &mut rng);
    let noise = Normal::new(0.0, sigma).map_err(|e| crate::Error::Invalid(e.to_string()))?;
    let targets = (0..n_alg)
        .map(|a| {
            planted.iter().map(|&(e, w)| w * x[a * n_env + e]).sum::<f64>() + noise.sample(&mut rng)
        })
        .collect();
    PreparedDataset::from_parts(
        algorithm_names(n_alg),
        environment_names(n_env),
        x.into_iter().map(Some).collect(),
        targets,
        TargetStat::Median,
        FilterConfig::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub n_algorithms: usize,
    /// Probability that any one cell is missing.
    pub missing_rate: f64,
    /// Environment reported by only a few algorithms, as on real leaderboards.
    pub sparse_environment_rate: f64,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            n_algorithms: 60,
            missing_rate: 0.05,
            sparse_environment_rate: 0.15,
            seed: 2022,
        }
    }
}

const SPARSE_ENVIRONMENT: &str = "Surround";

/// Raw-score leaderboard over every environment of `norms`, generated on the
/// log-normalized scale and mapped back to game points (two decimals).
///
/// Per environment: a difficulty offset and a skill loading. Cells whose
/// latent value falls below zero land below the random reference.
pub fn demo_raw_table(norms: &NormalizationTable, config: DemoConfig) -> Result<RawScoreTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let offset = Normal::new(0.0, 0.4).expect("valid sigma");
    let cell_noise = Normal::new(0.0, 0.3).expect("valid sigma");
    let envs: Vec<(String, f64, f64, f64, f64)> = norms
        .iter()
        .map(|(name, e)| {
            (
                name.to_string(),
                e.random,
                e.human,
                offset.sample(&mut rng),
                rng.random_range(0.7..1.2),
            )
        })
        .collect();
    let skills: Vec<f64> = (0..config.n_algorithms)
        .map(|_| rng.random_range(0.2..2.4))
        .collect();
    let mut scores = Vec::with_capacity(config.n_algorithms * envs.len());
    for &skill in &skills {
        for (name, random, human, diff, load) in &envs {
            let rate = if name == SPARSE_ENVIRONMENT {
                1.0 - config.sparse_environment_rate
            } else {
                config.missing_rate
            };
            let y = load * skill + diff + cell_noise.sample(&mut rng);
            let missing = rng.random_bool(rate.clamp(0.0, 1.0));
            let z = if y >= 0.0 { inverse_log_transform(y) } else { 10.0 * y };
            let raw = random + z * (human - random) / 100.0;
            scores.push((!missing).then(|| (raw * 100.0).round() / 100.0));
        }
    }
    RawScoreTable::new(
        algorithm_names(config.n_algorithms),
        envs.into_iter().map(|e| e.0).collect(),
        scores,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::normalization_table;
    use crate::score_table::prepare;

    #[test]
    fn planted_is_deterministic() {
        let a = planted_dataset(30, 8, &[(1, 0.5)], 0.02, 7).unwrap();
        let b = planted_dataset(30, 8, &[(1, 0.5)], 0.02, 7).unwrap();
        assert_eq!(a.checksum(), b.checksum());
    }

    #[test]
    fn demo_survives_default_filter() {
        let raw = demo_raw_table(&normalization_table(), DemoConfig::default()).unwrap();
        let d = prepare(&raw, &normalization_table(), FilterConfig::default(), TargetStat::Median).unwrap();
        assert_eq!(d.n_algorithms(), 60);
        assert_eq!(d.n_environments(), 56);
        assert!(d.environment_index("Surround").is_none());
    }
}
