//! Exhaustive subset search and the nested selection pipeline.
//!
//! Every size-`C` subset of the eligible environments is scored by k-fold
//! cross-validated MSE of a least-squares fit of the target on the subset's
//! log scores. Algorithms missing any score of a candidate are dropped for
//! that candidate only.
//!
//! Candidates are generated in colex order and processed in fixed-size blocks
//! on a rayon pool. Each block keeps its own top-k; blocks are merged under
//! the total order (cv_mse, then the lexicographically sorted environment
//! names), so the ranking does not depend on the number of workers.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{self, CvWorkspace, Design, LinearModel, MAX_COLUMNS};
use crate::names::canonical_key;
use crate::score_table::{AlgorithmMask, PreparedDataset, TargetStat};

const BLOCK_SIZE: u64 = 4096;
const PROGRESS_EVERY: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub subset_size: usize,
    pub must_include: Vec<String>,
    pub exclude: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub with_intercept: bool,
    pub top_k: usize,
    /// Worker count; 0 picks the rayon default. Does not affect results.
    #[serde(skip)]
    pub threads: usize,
    /// Emit a status line to stderr every million candidates.
    #[serde(skip)]
    pub progress: bool,
}

impl SearchConfig {
    pub fn new(subset_size: usize) -> Self {
        Self {
            subset_size,
            must_include: Vec::new(),
            exclude: Vec::new(),
            folds: 10,
            seed: 0,
            with_intercept: false,
            top_k: 10,
            threads: 0,
            progress: false,
        }
    }
}

/// Candidate accounting; `scored + skipped_too_few_algorithms +
/// skipped_singular == total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub total: u64,
    pub scored: u64,
    pub skipped_too_few_algorithms: u64,
    pub skipped_singular: u64,
}

impl SearchStats {
    fn merge(mut self, other: SearchStats) -> Self {
        self.total += other.total;
        self.scored += other.scored;
        self.skipped_too_few_algorithms += other.skipped_too_few_algorithms;
        self.skipped_singular += other.skipped_singular;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSubset {
    /// In dataset order.
    pub environments: Vec<String>,
    pub model: LinearModel,
    pub cv_mse: f64,
    pub n_algorithms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub ranked: Vec<RankedSubset>,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn best(&self) -> &RankedSubset {
        &self.ranked[0]
    }

    /// The ranking as CSV: `rank,cv_mse,n_algorithms,environments,coefficients`,
    /// list fields `;`-separated, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,cv_mse,n_algorithms,environments,coefficients\n");
        for (i, r) in self.ranked.iter().enumerate() {
            let coefs: Vec<String> = r.model.coefficients.iter().map(f64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                r.cv_mse,
                r.n_algorithms,
                csv_field(&r.environments.join(";")),
                coefs.join(";")
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// n choose k, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// The colex-rank `rank` k-combination of `0..m`, ascending.
fn colex_unrank(mut rank: u64, k: usize, m: usize) -> Vec<usize> {
    let mut comb = vec![0; k];
    let mut upper = m;
    for i in (1..=k).rev() {
        // Largest c < upper with C(c, i) <= rank.
        let mut c = upper - 1;
        while binomial(c as u64, i as u64) > rank {
            c -= 1;
        }
        comb[i - 1] = c;
        rank -= binomial(c as u64, i as u64);
        upper = c;
    }
    comb
}

/// Advance to the colex successor; false after the last combination.
fn colex_next(comb: &mut [usize], m: usize) -> bool {
    let k = comb.len();
    for i in 0..k {
        let limit = if i + 1 < k { comb[i + 1] } else { m };
        if comb[i] + 1 < limit {
            comb[i] += 1;
            for (j, c) in comb.iter_mut().take(i).enumerate() {
                *c = j;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone)]
struct Candidate {
    cv_mse: f64,
    /// Dataset environment indices, ascending.
    environments: Vec<usize>,
    /// Lexicographic name ranks of `environments`, ascending.
    name_key: Vec<usize>,
    n_algorithms: usize,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.cv_mse
        .total_cmp(&b.cv_mse)
        .then_with(|| a.name_key.cmp(&b.name_key))
}

fn merge_top(mut a: Vec<Candidate>, b: Vec<Candidate>, k: usize) -> Vec<Candidate> {
    a.extend(b);
    a.sort_by(candidate_order);
    a.truncate(k);
    a
}

struct Scratch {
    ws: CvWorkspace,
    x: Vec<f64>,
    t: Vec<f64>,
    envs: Vec<usize>,
    comb: Vec<usize>,
}

struct Plan<'a> {
    dataset: &'a PreparedDataset,
    config: &'a SearchConfig,
    pool: Vec<usize>,
    must: Vec<usize>,
    must_mask: AlgorithmMask,
    name_rank: Vec<usize>,
    k: usize,
    total: u64,
}

impl Plan<'_> {
    fn min_rows(&self) -> usize {
        let columns = self.config.subset_size + usize::from(self.config.with_intercept);
        (columns + 2).max(self.config.folds)
    }

    fn run_block(&self, block: u64, scratch: &mut Scratch) -> (Vec<Candidate>, SearchStats) {
        let start = block * BLOCK_SIZE;
        let end = (start + BLOCK_SIZE).min(self.total);
        let mut stats = SearchStats::default();
        let mut top: Vec<Candidate> = Vec::new();
        scratch.comb = colex_unrank(start, self.k, self.pool.len());
        let min_rows = self.min_rows();
        let p = self.config.subset_size;
        for _ in start..end {
            stats.total += 1;
            let envs = &mut scratch.envs;
            envs.clear();
            envs.extend(&self.must);
            envs.extend(scratch.comb.iter().map(|&i| self.pool[i]));
            envs.sort_unstable();

            let mut mask = self.must_mask.clone();
            for &i in &scratch.comb {
                mask.intersect_with(self.dataset.presence(self.pool[i]));
            }
            let n = mask.count();
            if n < min_rows {
                stats.skipped_too_few_algorithms += 1;
            } else {
                scratch.x.clear();
                scratch.t.clear();
                let targets = self.dataset.targets();
                for a in mask.iter() {
                    for &e in envs.iter() {
                        scratch.x.push(self.dataset.column(e)[a]);
                    }
                    scratch.t.push(targets[a]);
                }
                match linreg::cv_mse_raw(
                    &scratch.x,
                    p,
                    &scratch.t,
                    self.config.folds,
                    self.config.seed,
                    self.config.with_intercept,
                    &mut scratch.ws,
                ) {
                    Ok(cv_mse) => {
                        stats.scored += 1;
                        let worst_ok = top.len() < self.config.top_k
                            || top.last().is_some_and(|w| cv_mse <= w.cv_mse);
                        if worst_ok {
                            let mut name_key: Vec<usize> =
                                envs.iter().map(|&e| self.name_rank[e]).collect();
                            name_key.sort_unstable();
                            let cand = Candidate {
                                cv_mse,
                                environments: envs.clone(),
                                name_key,
                                n_algorithms: n,
                            };
                            let pos = top
                                .binary_search_by(|c| candidate_order(c, &cand))
                                .unwrap_or_else(|e| e);
                            top.insert(pos, cand);
                            top.truncate(self.config.top_k);
                        }
                    }
                    Err(_) => stats.skipped_singular += 1,
                }
            }
            colex_next(&mut scratch.comb, self.pool.len());
        }
        (top, stats)
    }
}

fn resolve_set(dataset: &PreparedDataset, names: &[String]) -> Result<BTreeSet<usize>> {
    Ok(dataset.resolve(names)?.into_iter().collect())
}

fn build_plan<'a>(dataset: &'a PreparedDataset, config: &'a SearchConfig) -> Result<Plan<'a>> {
    if config.subset_size == 0 || config.subset_size > MAX_COLUMNS {
        return Err(Error::invalid(format!(
            "subset size must be between 1 and {MAX_COLUMNS}"
        )));
    }
    if config.folds < 2 {
        return Err(Error::invalid("at least 2 folds required"));
    }
    if config.top_k == 0 {
        return Err(Error::invalid("top_k must be at least 1"));
    }
    let must = resolve_set(dataset, &config.must_include)?;
    let exclude = resolve_set(dataset, &config.exclude)?;
    if let Some(&e) = must.intersection(&exclude).next() {
        return Err(Error::invalid(format!(
            "environment {:?} is both required and excluded",
            dataset.environment_ids()[e]
        )));
    }
    if must.len() > config.subset_size {
        return Err(Error::invalid(format!(
            "{} required environments exceed subset size {}",
            must.len(),
            config.subset_size
        )));
    }
    let pool: Vec<usize> = (0..dataset.n_environments())
        .filter(|e| !must.contains(e) && !exclude.contains(e))
        .collect();
    let k = config.subset_size - must.len();
    if pool.len() < k {
        return Err(Error::invalid(format!(
            "only {} eligible environments for {k} open slots",
            pool.len()
        )));
    }
    let must: Vec<usize> = must.into_iter().collect();
    let must_mask = dataset.complete_rows(&must);
    let mut by_name: Vec<usize> = (0..dataset.n_environments()).collect();
    by_name.sort_by(|&a, &b| dataset.environment_ids()[a].cmp(&dataset.environment_ids()[b]));
    let mut name_rank = vec![0; by_name.len()];
    for (rank, &e) in by_name.iter().enumerate() {
        name_rank[e] = rank;
    }
    let total = binomial(pool.len() as u64, k as u64);
    Ok(Plan {
        dataset,
        config,
        pool,
        must,
        must_mask,
        name_rank,
        k,
        total,
    })
}

/// Rows (algorithms) complete on `environments`, as a design matrix with the
/// matching targets.
pub fn subset_design(dataset: &PreparedDataset, environments: &[usize]) -> Result<(Design, Vec<f64>)> {
    let rows = dataset.complete_rows(environments);
    let mut data = Vec::with_capacity(rows.count() * environments.len());
    let mut t = Vec::with_capacity(rows.count());
    for a in rows.iter() {
        data.extend(environments.iter().map(|&e| dataset.column(e)[a]));
        t.push(dataset.targets()[a]);
    }
    let names = environments
        .iter()
        .map(|&e| dataset.environment_ids()[e].clone())
        .collect();
    Ok((Design::from_row_major(names, data)?, t))
}

/// In-sample OLS refit of a subset, annotated with its cross-validated MSE
/// and the dataset checksums.
pub fn fit_subset(
    dataset: &PreparedDataset,
    environments: &[usize],
    folds: usize,
    seed: u64,
    with_intercept: bool,
) -> Result<LinearModel> {
    let (x, t) = subset_design(dataset, environments)?;
    let mut model = linreg::fit_ols(&x, &t, with_intercept)?;
    model.stats.cv_mse = Some(linreg::cross_validated_mse(&x, &t, folds, seed, with_intercept)?);
    model.norms_sha256 = dataset.provenance().norms_sha256.clone();
    model.provenance = dataset.provenance().clone();
    Ok(model)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Score every admissible subset and return the best `top_k`.
pub fn enumerate_and_score(dataset: &PreparedDataset, config: &SearchConfig) -> Result<SearchResult> {
    let plan = build_plan(dataset, config)?;
    let n_blocks = plan.total.div_ceil(BLOCK_SIZE);
    let processed = AtomicU64::new(0);

    let (top, stats) = with_pool(config.threads, || {
        (0..n_blocks)
            .into_par_iter()
            .map_init(
                || Scratch {
                    ws: CvWorkspace::new(),
                    x: Vec::new(),
                    t: Vec::new(),
                    envs: Vec::new(),
                    comb: Vec::new(),
                },
                |scratch, block| {
                    let out = plan.run_block(block, scratch);
                    if config.progress {
                        let n = out.1.total;
                        let before = processed.fetch_add(n, AtomicOrdering::Relaxed);
                        if (before + n) / PROGRESS_EVERY > before / PROGRESS_EVERY {
                            eprintln!(
                                "[search C={}] {} / {} candidates",
                                config.subset_size,
                                (before + n) / PROGRESS_EVERY * PROGRESS_EVERY,
                                plan.total
                            );
                        }
                    }
                    out
                },
            )
            .reduce(
                || (Vec::new(), SearchStats::default()),
                |(ta, sa), (tb, sb)| (merge_top(ta, tb, config.top_k), sa.merge(sb)),
            )
    })?;

    if top.is_empty() {
        return Err(Error::EmptySearch {
            total: stats.total,
            too_few_algorithms: stats.skipped_too_few_algorithms,
            singular: stats.skipped_singular,
        });
    }
    let ranked = top
        .into_iter()
        .map(|c| {
            let (x, t) = subset_design(dataset, &c.environments)?;
            let mut model = linreg::fit_ols(&x, &t, config.with_intercept)?;
            model.stats.cv_mse = Some(c.cv_mse);
            model.norms_sha256 = dataset.provenance().norms_sha256.clone();
            model.provenance = dataset.provenance().clone();
            Ok(RankedSubset {
                environments: model.environment_ids.clone(),
                model,
                cv_mse: c.cv_mse,
                n_algorithms: c.n_algorithms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchResult { ranked, stats })
}

/// Names of the members of a [`SubsetSuite`], in pipeline order.
pub const SUITE_MEMBERS: [&str; 6] = ["size-5", "size-3", "size-1", "val-3", "val-5", "size-10"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub model: LinearModel,
    pub search: SearchStats,
}

/// One model per environment, each predicting that environment's log score
/// from the subset's log scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    pub subset: Vec<String>,
    pub models: Vec<GameModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameModel {
    pub environment: String,
    /// `None` when too few algorithms had the needed scores.
    pub model: Option<LinearModel>,
    pub n_algorithms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ModelBank {
    pub fn get(&self, environment: &str) -> Option<&GameModel> {
        let key = canonical_key(environment);
        self.models.iter().find(|m| canonical_key(&m.environment) == key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSuite {
    pub entries: Vec<SuiteEntry>,
    pub banks: BTreeMap<String, ModelBank>,
    pub folds: usize,
    pub seed: u64,
    pub with_intercept: bool,
    pub target_stat: TargetStat,
    pub dataset_sha256: String,
}

impl SubsetSuite {
    pub fn get(&self, name: &str) -> Option<&LinearModel> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.model)
    }

    fn set(&self, name: &str) -> BTreeSet<String> {
        self.get(name)
            .map(|m| m.environment_ids.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Nesting and disjointness of the named subsets.
    pub fn check_invariants(&self) -> Result<()> {
        let s1 = self.set("size-1");
        let s3 = self.set("size-3");
        let s5 = self.set("size-5");
        let s10 = self.set("size-10");
        let v3 = self.set("val-3");
        let v5 = self.set("val-5");
        let checks = [
            (s1.is_subset(&s3), "size-1 within size-3"),
            (s3.is_subset(&s5), "size-3 within size-5"),
            (s5.is_subset(&s10), "size-5 within size-10"),
            (v3.is_subset(&v5), "val-3 within val-5"),
            (v5.is_disjoint(&s5), "val-5 disjoint from size-5"),
            (
                s10.difference(&s5).all(|e| !v5.contains(e)),
                "size-10 extension disjoint from val-5",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, what)) => Err(Error::invalid(format!("suite invariant violated: {what}"))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub folds: usize,
    pub seed: u64,
    pub threads: usize,
    pub progress: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 0,
            threads: 0,
            progress: false,
        }
    }
}

/// The nested protocol: best 5; best 3 within it; best 1 within that; a
/// disjoint validation 3 and its extension to 5; finally the 5 extended to 10
/// avoiding the validation games.
pub fn nested_pipeline(dataset: &PreparedDataset, options: PipelineOptions) -> Result<SubsetSuite> {
    const MIN_ENVIRONMENTS: usize = 15;
    if dataset.n_environments() < MIN_ENVIRONMENTS {
        return Err(Error::invalid(format!(
            "the nested pipeline needs at least {MIN_ENVIRONMENTS} environments, dataset has {}",
            dataset.n_environments()
        )));
    }
    let all = dataset.environment_ids().to_vec();
    let complement = |keep: &[String]| -> Vec<String> {
        let keep: BTreeSet<&String> = keep.iter().collect();
        all.iter().filter(|e| !keep.contains(e)).cloned().collect()
    };
    let search = |stage: &'static str, size: usize, must: Vec<String>, exclude: Vec<String>| {
        let config = SearchConfig {
            subset_size: size,
            must_include: must,
            exclude,
            folds: options.folds,
            seed: options.seed,
            with_intercept: false,
            top_k: 1,
            threads: options.threads,
            progress: options.progress,
        };
        enumerate_and_score(dataset, &config)
            .map_err(|e| e.in_stage(stage))
            .map(|r| {
                let best = r.ranked.into_iter().next().expect("non-empty ranking");
                SuiteEntry {
                    name: stage.to_string(),
                    model: best.model.with_name(stage),
                    search: r.stats,
                }
            })
    };

    let size5 = search("size-5", 5, vec![], vec![])?;
    let s5 = size5.model.environment_ids.clone();
    let size3 = search("size-3", 3, vec![], complement(&s5))?;
    let s3 = size3.model.environment_ids.clone();
    let size1 = search("size-1", 1, vec![], complement(&s3))?;
    let val3 = search("val-3", 3, vec![], s5.clone())?;
    let val5 = search("val-5", 5, val3.model.environment_ids.clone(), s5.clone())?;
    let size10 = search("size-10", 10, s5.clone(), val5.model.environment_ids.clone())?;

    let suite = SubsetSuite {
        entries: vec![size5, size3, size1, val3, val5, size10],
        banks: BTreeMap::new(),
        folds: options.folds,
        seed: options.seed,
        with_intercept: false,
        target_stat: dataset.target_stat(),
        dataset_sha256: dataset.checksum(),
    };
    suite.check_invariants()?;
    Ok(suite)
}

/// Fit `log_score(g) ~ subset` with an intercept for every environment `g`.
/// Subset members get exact identity models.
pub fn per_game_models(dataset: &PreparedDataset, subset: &[String]) -> Result<ModelBank> {
    let idx = dataset.resolve(subset)?;
    let names: Vec<String> = idx.iter().map(|&e| dataset.environment_ids()[e].clone()).collect();
    let mut models = Vec::with_capacity(dataset.n_environments());
    for g in 0..dataset.n_environments() {
        let environment = dataset.environment_ids()[g].clone();
        let mut envs = idx.clone();
        envs.push(g);
        let rows = dataset.complete_rows(&envs);
        let n = rows.count();
        if let Some(pos) = idx.iter().position(|&e| e == g) {
            let mut model = LinearModel::identity(names.clone(), pos);
            model.stats.n_algorithms = n;
            model.norms_sha256 = dataset.provenance().norms_sha256.clone();
            models.push(GameModel {
                environment,
                model: Some(model),
                n_algorithms: n,
                note: None,
            });
            continue;
        }
        if n < idx.len() + 3 {
            models.push(GameModel {
                environment,
                model: None,
                n_algorithms: n,
                note: Some(format!("only {n} algorithms with complete scores")),
            });
            continue;
        }
        let mut data = Vec::with_capacity(n * idx.len());
        let mut t = Vec::with_capacity(n);
        for a in rows.iter() {
            data.extend(idx.iter().map(|&e| dataset.column(e)[a]));
            t.push(dataset.column(g)[a]);
        }
        let x = Design::from_row_major(names.clone(), data)?;
        let (model, note) = match linreg::fit_ols(&x, &t, true) {
            Ok(mut m) => {
                m.norms_sha256 = dataset.provenance().norms_sha256.clone();
                (Some(m.with_name(environment.clone())), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        models.push(GameModel {
            environment,
            model,
            n_algorithms: n,
            note,
        });
    }
    Ok(ModelBank {
        subset: names,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceExplained {
    pub fraction: f64,
    pub cells: usize,
    pub environments_used: usize,
    /// Environments whose bank model is unusable.
    pub skipped: Vec<String>,
}

/// Pooled `1 − Σ residual² / Σ (y − mean_g)²` over every cell a bank model can
/// predict, means taken per environment.
pub fn variance_explained(bank: &ModelBank, dataset: &PreparedDataset) -> Result<VarianceExplained> {
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut cells = 0;
    let mut used = 0;
    let mut skipped = Vec::new();
    for g in 0..dataset.n_environments() {
        let name = &dataset.environment_ids()[g];
        let entry = bank
            .get(name)
            .ok_or_else(|| Error::invalid(format!("model bank has no entry for {name:?}")))?;
        let Some(model) = &entry.model else {
            skipped.push(name.clone());
            continue;
        };
        let inputs = dataset.resolve(&model.environment_ids)?;
        let mut envs = inputs.clone();
        envs.push(g);
        let rows: Vec<usize> = dataset.complete_rows(&envs).iter().collect();
        if rows.is_empty() {
            skipped.push(name.clone());
            continue;
        }
        let ys: Vec<f64> = rows.iter().map(|&a| dataset.column(g)[a]).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut x = vec![0.0; inputs.len()];
        for (&a, &y) in rows.iter().zip(&ys) {
            for (xi, &e) in x.iter_mut().zip(&inputs) {
                *xi = dataset.column(e)[a];
            }
            let r = y - model.predict_row(&x);
            ss_res += r * r;
            ss_tot += (y - mean) * (y - mean);
        }
        cells += rows.len();
        used += 1;
    }
    let fraction = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(VarianceExplained {
        fraction,
        cells,
        environments_used: used,
        skipped,
    })
}

/// Convenience: resolve names through the dataset and build a search config
/// restricted to `pool` (everything else excluded).
pub fn within(dataset: &PreparedDataset, size: usize, pool: &[String]) -> SearchConfig {
    let keep: BTreeSet<String> = pool.iter().map(|p| canonical_key(p)).collect();
    let mut config = SearchConfig::new(size);
    config.exclude = dataset
        .environment_ids()
        .iter()
        .filter(|e| !keep.contains(&canonical_key(e)))
        .cloned()
        .collect();
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 5), 6);
        assert_eq!(binomial(56, 5), 3_819_816);
        assert_eq!(binomial(46, 5), 1_370_754);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(10, 0), 1);
    }

    #[test]
    fn colex_enumeration_is_complete_and_unrank_agrees() {
        let (m, k) = (7, 3);
        let mut comb = colex_unrank(0, k, m);
        let mut seen = vec![comb.clone()];
        while colex_next(&mut comb, m) {
            seen.push(comb.clone());
        }
        assert_eq!(seen.len() as u64, binomial(m as u64, k as u64));
        for (rank, c) in seen.iter().enumerate() {
            assert_eq!(&colex_unrank(rank as u64, k, m), c);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
        let unique: BTreeSet<_> = seen.into_iter().collect();
        assert_eq!(unique.len(), 35);
    }

    #[test]
    fn empty_combination() {
        let mut comb = colex_unrank(0, 0, 4);
        assert!(comb.is_empty());
        assert!(!colex_next(&mut comb, 4));
    }
}
