//! Score ingestion and preparation.
//!
//! The flow is `load_scores` → [`filter_dataset`] → [`normalize`] →
//! [`log_transform`] per cell, with per-algorithm targets from
//! [`compute_target`]. [`prepare`] runs all of it.
//!
//! Missing scores stay missing throughout; nothing is imputed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::sha256_hex;
use crate::names::canonical_key;

/// Header of the algorithm-name column in score files.
pub const ALGORITHM_COLUMN: &str = "algorithm";
/// Optional free-text column carried through as per-algorithm provenance.
pub const PROVENANCE_COLUMN: &str = "provenance";

/// Normalized score -> log-normalized score: `log10(1 + max(0, x))`.
///
/// Computed through `ln_1p` so that the inverse round-trips to full relative
/// precision near zero.
pub fn log_transform(x: f64) -> f64 {
    x.max(0.0).ln_1p() / std::f64::consts::LN_10
}

/// Log-normalized score -> normalized score: `10^y - 1`.
pub fn inverse_log_transform(y: f64) -> f64 {
    (y * std::f64::consts::LN_10).exp_m1()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawScoreTable {
    algorithm_ids: Vec<String>,
    environment_ids: Vec<String>,
    /// Row-major, one row per algorithm.
    scores: Vec<Option<f64>>,
    provenance: Vec<Option<String>>,
    checksum: Option<String>,
}

impl RawScoreTable {
    pub fn new(
        algorithm_ids: Vec<String>,
        environment_ids: Vec<String>,
        scores: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n_alg = algorithm_ids.len();
        Self::with_provenance(algorithm_ids, environment_ids, scores, vec![None; n_alg])
    }

    pub fn with_provenance(
        algorithm_ids: Vec<String>,
        environment_ids: Vec<String>,
        scores: Vec<Option<f64>>,
        provenance: Vec<Option<String>>,
    ) -> Result<Self> {
        check_unique("algorithm", algorithm_ids.iter().map(|a| a.clone()))?;
        check_unique("environment", environment_ids.iter().map(|e| canonical_key(e)))
            .map_err(|_| duplicate_env(&environment_ids))?;
        if scores.len() != algorithm_ids.len() * environment_ids.len() {
            return Err(Error::invalid(format!(
                "score matrix has {} cells, expected {} x {}",
                scores.len(),
                algorithm_ids.len(),
                environment_ids.len()
            )));
        }
        if provenance.len() != algorithm_ids.len() {
            return Err(Error::invalid("provenance length differs from algorithm count"));
        }
        if let Some(bad) = scores.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite score {bad}")));
        }
        Ok(Self {
            algorithm_ids,
            environment_ids,
            scores,
            provenance,
            checksum: None,
        })
    }

    pub fn algorithm_ids(&self) -> &[String] {
        &self.algorithm_ids
    }

    pub fn environment_ids(&self) -> &[String] {
        &self.environment_ids
    }

    pub fn provenance(&self, algorithm: usize) -> Option<&str> {
        self.provenance[algorithm].as_deref()
    }

    pub fn get(&self, algorithm: usize, environment: usize) -> Option<f64> {
        self.scores[algorithm * self.environment_ids.len() + environment]
    }

    pub fn row(&self, algorithm: usize) -> &[Option<f64>] {
        let n = self.environment_ids.len();
        &self.scores[algorithm * n..(algorithm + 1) * n]
    }

    pub fn algorithm_index(&self, id: &str) -> Option<usize> {
        self.algorithm_ids.iter().position(|a| a == id)
    }

    pub fn environment_index(&self, name: &str) -> Option<usize> {
        let key = canonical_key(name);
        self.environment_ids.iter().position(|e| canonical_key(e) == key)
    }

    pub fn missing_count(&self) -> usize {
        self.scores.iter().filter(|s| s.is_none()).count()
    }

    /// SHA-256 of the file this table was read from, if any.
    pub fn checksum(&self) -> Option<&str> {
        self.checksum.as_deref()
    }

    fn present_in_row(&self, algorithm: usize) -> usize {
        self.row(algorithm).iter().filter(|s| s.is_some()).count()
    }

    /// Serialize in the form [`parse_scores`] reads; missing cells are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let with_prov = self.provenance.iter().any(Option::is_some);
        let mut header = vec![ALGORITHM_COLUMN.to_string()];
        if with_prov {
            header.push(PROVENANCE_COLUMN.to_string());
        }
        header.extend(self.environment_ids.iter().cloned());
        let to_err = |e: csv::Error| Error::invalid(e.to_string());
        w.write_record(&header).map_err(to_err)?;
        for (a, id) in self.algorithm_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            if with_prov {
                rec.push(self.provenance[a].clone().unwrap_or_default());
            }
            rec.extend(self.row(a).iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn check_unique(kind: &'static str, ids: impl Iterator<Item = String>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { kind, id });
        }
    }
    Ok(())
}

fn duplicate_env(ids: &[String]) -> Error {
    let mut seen = HashSet::new();
    let id = ids
        .iter()
        .find(|e| !seen.insert(canonical_key(e)))
        .cloned()
        .unwrap_or_default();
    Error::DuplicateId {
        kind: "environment",
        id,
    }
}

/// Numeric columns pulled out of a score file before the remaining columns
/// are read as environments (e.g. a published summary score).
pub type SideColumns = BTreeMap<String, Vec<Option<f64>>>;

/// Read a score CSV: `algorithm,<env_1>,...,<env_n>`, empty cell = missing.
pub fn load_scores(path: impl AsRef<Path>) -> Result<RawScoreTable> {
    load_scores_with_side_columns(path, &[]).map(|(table, _)| table)
}

pub fn load_scores_with_side_columns(
    path: impl AsRef<Path>,
    side_columns: &[&str],
) -> Result<(RawScoreTable, SideColumns)> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let (mut table, side) = parse_scores(&bytes[..], path, side_columns)?;
    table.checksum = Some(sha256_hex(&bytes));
    Ok((table, side))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn schema(path: &Path, line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    schema(path, line, 0, err.to_string())
}

fn parse_cell(path: &Path, line: u64, column: usize, cell: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let value: f64 = cell
        .parse()
        .map_err(|_| schema(path, line, column, format!("not a number: {cell:?}")))?;
    if !value.is_finite() {
        return Err(schema(path, line, column, format!("non-finite score {cell:?}")));
    }
    Ok(Some(value))
}

/// Parse score CSV text. `path` is only used to label errors.
pub fn parse_scores<R: Read>(
    reader: R,
    path: &Path,
    side_columns: &[&str],
) -> Result<(RawScoreTable, SideColumns)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0).map(str::to_ascii_lowercase).as_deref() != Some(ALGORITHM_COLUMN) {
        return Err(schema(path, 1, 1, "first header cell must be `algorithm`"));
    }

    enum Role {
        Environment(usize),
        Side(String),
        Provenance,
    }
    let mut roles = Vec::new();
    let mut environment_ids = Vec::new();
    for name in header.iter().skip(1) {
        if let Some(side) = side_columns.iter().find(|s| s.eq_ignore_ascii_case(name)) {
            roles.push(Role::Side((*side).to_string()));
        } else if name.eq_ignore_ascii_case(PROVENANCE_COLUMN) {
            roles.push(Role::Provenance);
        } else {
            if name.is_empty() {
                return Err(schema(path, 1, roles.len() + 2, "empty environment name"));
            }
            roles.push(Role::Environment(environment_ids.len()));
            environment_ids.push(name.to_string());
        }
    }
    for side in side_columns {
        if !roles.iter().any(|r| matches!(r, Role::Side(s) if s == side)) {
            return Err(schema(path, 1, 0, format!("missing column {side:?}")));
        }
    }
    check_unique("environment", environment_ids.iter().map(|e| canonical_key(e)))
        .map_err(|_| duplicate_env(&environment_ids))?;

    let mut algorithm_ids = Vec::new();
    let mut scores = Vec::new();
    let mut provenance = Vec::new();
    let mut side: SideColumns = side_columns
        .iter()
        .map(|s| (s.to_string(), Vec::new()))
        .collect();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let name = record.get(0).unwrap_or_default();
        if name.is_empty() {
            return Err(schema(path, line, 1, "empty algorithm name"));
        }
        let mut row = vec![None; environment_ids.len()];
        let mut prov = None;
        for (i, role) in roles.iter().enumerate() {
            let cell = record.get(i + 1).unwrap_or_default();
            match role {
                Role::Environment(e) => row[*e] = parse_cell(path, line, i + 2, cell)?,
                Role::Side(s) => side
                    .get_mut(s)
                    .expect("side column registered")
                    .push(parse_cell(path, line, i + 2, cell)?),
                Role::Provenance => prov = (!cell.is_empty()).then(|| cell.to_string()),
            }
        }
        algorithm_ids.push(name.to_string());
        scores.extend(row);
        provenance.push(prov);
    }
    let table = RawScoreTable::with_provenance(algorithm_ids, environment_ids, scores, provenance)?;
    Ok((table, side))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub random: f64,
    pub human: f64,
}

impl NormEntry {
    /// `100 * (x - random) / (human - random)`, evaluated so that both
    /// anchors map to exactly 0 and 100.
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.random) / (self.human - self.random) * 100.0
    }
}

/// Per-environment random and human reference scores.
#[derive(Debug, Clone)]
pub struct NormalizationTable {
    names: Vec<String>,
    entries: Vec<NormEntry>,
    by_key: HashMap<String, usize>,
    checksum: Option<String>,
}

impl NormalizationTable {
    pub fn new(rows: Vec<(String, NormEntry)>) -> Result<Self> {
        let mut names = Vec::with_capacity(rows.len());
        let mut entries = Vec::with_capacity(rows.len());
        let mut by_key = HashMap::new();
        for (name, entry) in rows {
            if !(entry.random.is_finite() && entry.human.is_finite()) {
                return Err(Error::invalid(format!("non-finite reference score for {name:?}")));
            }
            if entry.human == entry.random {
                return Err(Error::invalid(format!(
                    "human and random scores coincide for {name:?}"
                )));
            }
            if by_key.insert(canonical_key(&name), names.len()).is_some() {
                return Err(Error::DuplicateId {
                    kind: "environment",
                    id: name,
                });
            }
            names.push(name);
            entries.push(entry);
        }
        Ok(Self {
            names,
            entries,
            by_key,
            checksum: None,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_file(path)?;
        Self::parse(&bytes, path)
    }

    /// Parse `environment,random,human` CSV bytes; the checksum is taken over
    /// exactly these bytes.
    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let expected = ["environment", "random", "human"];
        if header.len() != 3
            || header
                .iter()
                .zip(expected)
                .any(|(h, e)| !h.eq_ignore_ascii_case(e))
        {
            return Err(schema(path, 1, 1, "header must be `environment,random,human`"));
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let value = |i: usize| -> Result<f64> {
                parse_cell(path, line, i + 1, &record[i])?
                    .ok_or_else(|| schema(path, line, i + 1, "empty reference score"))
            };
            rows.push((
                record[0].to_string(),
                NormEntry {
                    random: value(1)?,
                    human: value(2)?,
                },
            ));
        }
        let mut table = Self::new(rows)?;
        table.checksum = Some(sha256_hex(bytes));
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NormEntry)> {
        self.names.iter().map(String::as_str).zip(self.entries.iter().copied())
    }

    /// Look up by any spelling; returns the table's own spelling.
    pub fn lookup(&self, name: &str) -> Option<(&str, NormEntry)> {
        self.by_key
            .get(&canonical_key(name))
            .map(|&i| (self.names[i].as_str(), self.entries[i]))
    }

    pub fn normalize_score(&self, environment: &str, raw: f64) -> Result<f64> {
        self.lookup(environment)
            .map(|(_, e)| e.normalize(raw))
            .ok_or_else(|| Error::UnknownEnvironment(environment.to_string()))
    }

    pub fn checksum(&self) -> Option<&str> {
        self.checksum.as_deref()
    }
}

/// Human-normalized scores, environments renamed to the normalization
/// table's spelling.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScores {
    pub algorithm_ids: Vec<String>,
    pub environment_ids: Vec<String>,
    /// Row-major, one row per algorithm.
    pub values: Vec<Option<f64>>,
}

impl NormalizedScores {
    pub fn get(&self, algorithm: usize, environment: usize) -> Option<f64> {
        self.values[algorithm * self.environment_ids.len() + environment]
    }

    pub fn row(&self, algorithm: usize) -> &[Option<f64>] {
        let n = self.environment_ids.len();
        &self.values[algorithm * n..(algorithm + 1) * n]
    }
}

pub fn normalize(raw: &RawScoreTable, norms: &NormalizationTable) -> Result<NormalizedScores> {
    let mut environment_ids = Vec::with_capacity(raw.environment_ids.len());
    let mut entries = Vec::with_capacity(raw.environment_ids.len());
    for env in &raw.environment_ids {
        let (name, entry) = norms
            .lookup(env)
            .ok_or_else(|| Error::UnknownEnvironment(env.clone()))?;
        environment_ids.push(name.to_string());
        entries.push(entry);
    }
    let n_env = entries.len();
    let values = raw
        .scores
        .iter()
        .enumerate()
        .map(|(i, cell)| cell.map(|x| entries[i % n_env].normalize(x)))
        .collect();
    Ok(NormalizedScores {
        algorithm_ids: raw.algorithm_ids.clone(),
        environment_ids,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_games: usize,
    pub min_algorithms: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_games: 40,
            min_algorithms: 40,
        }
    }
}

/// Drop algorithms with fewer than `min_games` scores, then environments with
/// fewer than `min_algorithms` scores among the retained algorithms.
///
/// One pass in that order; not iterated to a fixed point.
pub fn filter_dataset(
    raw: &RawScoreTable,
    min_games: usize,
    min_algorithms: usize,
) -> Result<RawScoreTable> {
    if min_games == 0 || min_algorithms == 0 {
        return Err(Error::invalid("filter thresholds must be at least 1"));
    }
    let keep_alg: Vec<usize> = (0..raw.algorithm_ids.len())
        .filter(|&a| raw.present_in_row(a) >= min_games)
        .collect();
    let keep_env: Vec<usize> = (0..raw.environment_ids.len())
        .filter(|&e| keep_alg.iter().filter(|&&a| raw.get(a, e).is_some()).count() >= min_algorithms)
        .collect();
    if keep_alg.is_empty() || keep_env.is_empty() {
        return Err(Error::DegenerateDataset(format!(
            "filtering (min_games={min_games}, min_algorithms={min_algorithms}) left \
             {} algorithms x {} environments",
            keep_alg.len(),
            keep_env.len()
        )));
    }
    let scores = keep_alg
        .iter()
        .flat_map(|&a| keep_env.iter().map(move |&e| raw.get(a, e)))
        .collect();
    Ok(RawScoreTable {
        algorithm_ids: keep_alg.iter().map(|&a| raw.algorithm_ids[a].clone()).collect(),
        environment_ids: keep_env.iter().map(|&e| raw.environment_ids[e].clone()).collect(),
        scores,
        provenance: keep_alg.iter().map(|&a| raw.provenance[a].clone()).collect(),
        checksum: raw.checksum.clone(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetStat {
    #[default]
    Median,
    Mean,
}

impl TargetStat {
    /// Statistic over the given values; `None` for an empty slice.
    /// Even-length medians take the midpoint of the two central values.
    pub fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        match self {
            TargetStat::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
            TargetStat::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let mid = v.len() / 2;
                Some(if v.len() % 2 == 0 {
                    0.5 * (v[mid - 1] + v[mid])
                } else {
                    v[mid]
                })
            }
        }
    }
}

impl fmt::Display for TargetStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetStat::Median => "median",
            TargetStat::Mean => "mean",
        })
    }
}

impl std::str::FromStr for TargetStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(TargetStat::Median),
            "mean" => Ok(TargetStat::Mean),
            other => Err(Error::invalid(format!("unknown target statistic {other:?}"))),
        }
    }
}

/// Per-algorithm summary of the present normalized scores, on the log scale:
/// `log_transform(stat(Z))`.
pub fn compute_target(scores: &NormalizedScores, stat: TargetStat) -> Result<Vec<f64>> {
    (0..scores.algorithm_ids.len())
        .map(|a| {
            let present: Vec<f64> = scores.row(a).iter().flatten().copied().collect();
            stat.apply(&present).map(log_transform).ok_or_else(|| {
                Error::DegenerateDataset(format!(
                    "algorithm {:?} has no scores",
                    scores.algorithm_ids[a]
                ))
            })
        })
        .collect()
}

/// Bitset over algorithm rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgorithmMask(Vec<u64>);

impl AlgorithmMask {
    pub fn full(n: usize) -> Self {
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        if n % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        Self(words)
    }

    fn empty(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn intersect_with(&mut self, other: &AlgorithmMask) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set bits in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

/// Log-normalized scores and targets, ready for model fitting.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    algorithm_ids: Vec<String>,
    environment_ids: Vec<String>,
    /// Column-major; missing cells are NaN and absent from `presence`.
    columns: Vec<Vec<f64>>,
    presence: Vec<AlgorithmMask>,
    targets: Vec<f64>,
    target_stat: TargetStat,
    filter: FilterConfig,
    provenance: DatasetProvenance,
}

/// Checksums of the inputs a dataset was built from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub scores_sha256: Option<String>,
    pub norms_sha256: Option<String>,
}

impl PreparedDataset {
    /// Build from a row-major log-score matrix. Log scores must be
    /// non-negative and targets finite.
    pub fn from_parts(
        algorithm_ids: Vec<String>,
        environment_ids: Vec<String>,
        log_scores: Vec<Option<f64>>,
        targets: Vec<f64>,
        target_stat: TargetStat,
        filter: FilterConfig,
    ) -> Result<Self> {
        let (n_alg, n_env) = (algorithm_ids.len(), environment_ids.len());
        check_unique("algorithm", algorithm_ids.iter().cloned())?;
        check_unique("environment", environment_ids.iter().map(|e| canonical_key(e)))
            .map_err(|_| duplicate_env(&environment_ids))?;
        if log_scores.len() != n_alg * n_env || targets.len() != n_alg {
            return Err(Error::invalid("dataset dimensions do not match"));
        }
        if n_alg == 0 || n_env == 0 {
            return Err(Error::DegenerateDataset("empty dataset".into()));
        }
        if let Some(v) = log_scores.iter().flatten().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("log score {v} is not finite and non-negative")));
        }
        if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("non-finite target {t}")));
        }
        let mut columns = vec![vec![f64::NAN; n_alg]; n_env];
        let mut presence = vec![AlgorithmMask::empty(n_alg); n_env];
        for a in 0..n_alg {
            for e in 0..n_env {
                if let Some(v) = log_scores[a * n_env + e] {
                    columns[e][a] = v;
                    presence[e].set(a);
                }
            }
        }
        Ok(Self {
            algorithm_ids,
            environment_ids,
            columns,
            presence,
            targets,
            target_stat,
            filter,
            provenance: DatasetProvenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: DatasetProvenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn provenance(&self) -> &DatasetProvenance {
        &self.provenance
    }

    pub fn algorithm_ids(&self) -> &[String] {
        &self.algorithm_ids
    }

    pub fn environment_ids(&self) -> &[String] {
        &self.environment_ids
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithm_ids.len()
    }

    pub fn n_environments(&self) -> usize {
        self.environment_ids.len()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_stat(&self) -> TargetStat {
        self.target_stat
    }

    pub fn filter_config(&self) -> FilterConfig {
        self.filter
    }

    pub fn log_score(&self, algorithm: usize, environment: usize) -> Option<f64> {
        self.presence[environment]
            .contains(algorithm)
            .then(|| self.columns[environment][algorithm])
    }

    /// Raw column storage; cells not in [`presence`](Self::presence) are NaN.
    pub fn column(&self, environment: usize) -> &[f64] {
        &self.columns[environment]
    }

    pub fn presence(&self, environment: usize) -> &AlgorithmMask {
        &self.presence[environment]
    }

    pub fn environment_index(&self, name: &str) -> Option<usize> {
        let key = canonical_key(name);
        self.environment_ids.iter().position(|e| canonical_key(e) == key)
    }

    pub fn algorithm_index(&self, id: &str) -> Option<usize> {
        self.algorithm_ids.iter().position(|a| a == id)
    }

    /// Resolve environment names to indices, failing on the first unknown.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.environment_index(n)
                    .ok_or_else(|| Error::invalid(format!("environment {n:?} not in dataset")))
            })
            .collect()
    }

    /// Algorithms with a score on every listed environment.
    pub fn complete_rows(&self, environments: &[usize]) -> AlgorithmMask {
        let mut mask = AlgorithmMask::full(self.n_algorithms());
        for &e in environments {
            mask.intersect_with(&self.presence[e]);
        }
        mask
    }

    /// SHA-256 over the dataset content (ids, cell bits, targets).
    pub fn checksum(&self) -> String {
        let mut buf = Vec::new();
        for id in self.algorithm_ids.iter().chain(&self.environment_ids) {
            buf.extend_from_slice(id.as_bytes());
            buf.push(0);
        }
        for (e, col) in self.columns.iter().enumerate() {
            for (a, v) in col.iter().enumerate() {
                let bits = if self.presence[e].contains(a) { v.to_bits() } else { u64::MAX };
                buf.extend_from_slice(&bits.to_le_bytes());
            }
        }
        for t in &self.targets {
            buf.extend_from_slice(&t.to_bits().to_le_bytes());
        }
        buf.extend_from_slice(self.target_stat.to_string().as_bytes());
        sha256_hex(&buf)
    }
}

/// Filter, normalize, log-transform and compute targets.
pub fn prepare(
    raw: &RawScoreTable,
    norms: &NormalizationTable,
    filter: FilterConfig,
    stat: TargetStat,
) -> Result<PreparedDataset> {
    let filtered = filter_dataset(raw, filter.min_games, filter.min_algorithms)?;
    let normalized = normalize(&filtered, norms)?;
    let targets = compute_target(&normalized, stat)?;
    let log_scores = normalized.values.iter().map(|v| v.map(log_transform)).collect();
    Ok(PreparedDataset::from_parts(
        normalized.algorithm_ids,
        normalized.environment_ids,
        log_scores,
        targets,
        stat,
        filter,
    )?
    .with_provenance(DatasetProvenance {
        scores_sha256: raw.checksum.clone(),
        norms_sha256: norms.checksum.clone(),
    }))
}
