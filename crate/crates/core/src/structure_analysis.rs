//! Diagnostics over a prepared dataset: how well each environment alone
//! predicts the target, pairwise correlation of environments, and whether a
//! subset model's errors depend on how strong the algorithm is.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linreg::{self, Design};
use crate::names::canonical_key;
use crate::predictor::PredictionReport;
use crate::score_table::{read_file, PreparedDataset};

const MIN_SINGLE_GAME_ROWS: usize = 3;
const MIN_COMMON_ROWS: usize = 3;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleGameFit {
    pub environment: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_algorithms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleGameRanking {
    /// Ascending by R²; the best single predictor is last.
    pub ranked: Vec<SingleGameFit>,
    /// Environments left out, with the reason.
    pub flagged: Vec<(String, String)>,
}

/// Fit `target ~ intercept + slope · log_score(g)` in-sample for every
/// environment `g`.
pub fn rank_single_games(dataset: &PreparedDataset) -> Result<SingleGameRanking> {
    let mut ranked = Vec::new();
    let mut flagged = Vec::new();
    for g in 0..dataset.n_environments() {
        let environment = dataset.environment_ids()[g].clone();
        let rows: Vec<usize> = dataset.presence(g).iter().collect();
        if rows.len() < MIN_SINGLE_GAME_ROWS {
            flagged.push((environment, format!("only {} algorithms with a score", rows.len())));
            continue;
        }
        let x = Design::from_row_major(
            vec![environment.clone()],
            rows.iter().map(|&a| dataset.column(g)[a]).collect(),
        )?;
        let t: Vec<f64> = rows.iter().map(|&a| dataset.targets()[a]).collect();
        match linreg::fit_ols(&x, &t, true) {
            Ok(m) => ranked.push(SingleGameFit {
                environment,
                slope: m.coefficients[0],
                intercept: m.intercept_value(),
                r_squared: m.stats.r_squared,
                n_algorithms: rows.len(),
            }),
            Err(e) => flagged.push((environment, e.to_string())),
        }
    }
    ranked.sort_by(|a, b| {
        a.r_squared
            .total_cmp(&b.r_squared)
            .then_with(|| a.environment.cmp(&b.environment))
    });
    Ok(SingleGameRanking { ranked, flagged })
}

/// Pairwise-complete Pearson correlations of log scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGraph {
    pub environments: Vec<String>,
    /// `None` where fewer than three algorithms share both scores or a
    /// column is constant over the shared rows.
    pub pcc: Vec<Vec<Option<f64>>>,
    pub n_pairs: Vec<Vec<usize>>,
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

impl CorrelationGraph {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.pcc[a][b]
    }

    pub fn with_categories(mut self, categories: &Categories) -> Self {
        self.categories = self
            .environments
            .iter()
            .filter_map(|e| categories.get(e).map(|c| (e.clone(), c.to_string())))
            .collect();
        self
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson_matrix(dataset: &PreparedDataset) -> CorrelationGraph {
    let m = dataset.n_environments();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let cells: Vec<(Option<f64>, usize)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let rows = dataset.complete_rows(&[a, b]);
            let n = rows.count();
            if n < MIN_COMMON_ROWS {
                return (None, n);
            }
            let xs: Vec<f64> = rows.iter().map(|r| dataset.column(a)[r]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| dataset.column(b)[r]).collect();
            (pearson(&xs, &ys), n)
        })
        .collect();
    let mut pcc = vec![vec![None; m]; m];
    let mut n_pairs = vec![vec![0; m]; m];
    for e in 0..m {
        let n = dataset.presence(e).count();
        n_pairs[e][e] = n;
        if n >= 2 {
            pcc[e][e] = Some(1.0);
        }
    }
    for (&(a, b), &(r, n)) in pairs.iter().zip(&cells) {
        pcc[a][b] = r;
        pcc[b][a] = r;
        n_pairs[a][b] = n;
        n_pairs[b][a] = n;
    }
    CorrelationGraph {
        environments: dataset.environment_ids().to_vec(),
        pcc,
        n_pairs,
        categories: BTreeMap::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub a: String,
    pub b: String,
    pub pcc: f64,
    pub n_algorithms: usize,
    pub high: bool,
}

fn defined_pairs(graph: &CorrelationGraph) -> Vec<(usize, usize, f64)> {
    let m = graph.environments.len();
    (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .filter_map(|(a, b)| graph.pcc[a][b].map(|r| (a, b, r)))
        .collect()
}

fn to_pairs(graph: &CorrelationGraph, list: Vec<(usize, usize, f64)>, high: impl Fn(f64) -> bool) -> Vec<CorrelatedPair> {
    list.into_iter()
        .map(|(a, b, r)| CorrelatedPair {
            a: graph.environments[a].clone(),
            b: graph.environments[b].clone(),
            pcc: r,
            n_algorithms: graph.n_pairs[a][b],
            high: high(r),
        })
        .collect()
}

/// Pairs by descending PCC, each tagged high iff `pcc > threshold`.
pub fn correlated_pairs(graph: &CorrelationGraph, threshold: f64, top_n: usize) -> Result<Vec<CorrelatedPair>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut list = defined_pairs(graph);
    list.sort_by(|x, y| y.2.total_cmp(&x.2).then_with(|| (x.0, x.1).cmp(&(y.0, y.1))));
    list.truncate(top_n);
    Ok(to_pairs(graph, list, |r| r > threshold))
}

/// Negatively correlated pairs, most negative first; tagged high iff
/// `pcc < −threshold`.
pub fn anticorrelated_pairs(graph: &CorrelationGraph, threshold: f64, top_n: usize) -> Result<Vec<CorrelatedPair>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut list: Vec<_> = defined_pairs(graph).into_iter().filter(|p| p.2 < 0.0).collect();
    list.sort_by(|x, y| x.2.total_cmp(&y.2).then_with(|| (x.0, x.1).cmp(&(y.0, y.1))));
    list.truncate(top_n);
    Ok(to_pairs(graph, list, |r| r < -threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessGroup {
    pub name: String,
    pub algorithm_ids: Vec<String>,
    pub mean_abs_rel_error: f64,
    pub mean_rel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    AbsRelError,
    RelError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub group_a: String,
    pub group_b: String,
    pub metric: ErrorMetric,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Ordered low, mid, high by true summary.
    pub groups: Vec<FairnessGroup>,
    pub tests: Vec<WelchTest>,
}

impl FairnessReport {
    pub fn any_significant(&self) -> bool {
        self.tests.iter().any(|t| t.significant)
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Two-sided unequal-variance two-sample t-test: `(t, df, p)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateDataset(
            "t-test needs at least 2 observations per group".into(),
        ));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            (0.0, f64::INFINITY, 1.0)
        } else {
            ((ma - mb).signum() * f64::INFINITY, f64::INFINITY, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok((t, df, p))
}

/// Split algorithms into tertiles by true summary (remainder to the lower
/// tertiles) and compare per-group relative errors pairwise.
pub fn fairness_report(reports: &[PredictionReport]) -> Result<FairnessReport> {
    let mut usable: Vec<(&PredictionReport, f64, f64)> = reports
        .iter()
        .filter_map(|r| Some((r, r.true_summary?, r.relative_error?)))
        .collect();
    if usable.len() < 6 {
        return Err(Error::DegenerateDataset(format!(
            "fairness audit needs at least 6 algorithms with true summaries, got {}",
            usable.len()
        )));
    }
    usable.sort_by(|x, y| {
        x.1.total_cmp(&y.1)
            .then_with(|| x.0.algorithm_id.cmp(&y.0.algorithm_id))
    });
    let n = usable.len();
    let (base, extra) = (n / 3, n % 3);
    let mut groups = Vec::new();
    let mut samples = Vec::new();
    let mut start = 0;
    for (g, name) in ["low", "mid", "high"].into_iter().enumerate() {
        let len = base + usize::from(g < extra);
        let members = &usable[start..start + len];
        start += len;
        let rel: Vec<f64> = members.iter().map(|m| m.2).collect();
        let abs: Vec<f64> = rel.iter().map(|r| r.abs()).collect();
        groups.push(FairnessGroup {
            name: name.to_string(),
            algorithm_ids: members.iter().map(|m| m.0.algorithm_id.clone()).collect(),
            mean_abs_rel_error: abs.iter().sum::<f64>() / len as f64,
            mean_rel_error: rel.iter().sum::<f64>() / len as f64,
        });
        samples.push((abs, rel));
    }
    let mut tests = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for metric in [ErrorMetric::AbsRelError, ErrorMetric::RelError] {
            let pick = |k: usize| match metric {
                ErrorMetric::AbsRelError => &samples[k].0,
                ErrorMetric::RelError => &samples[k].1,
            };
            let (t, df, p_value) = welch_t_test(pick(i), pick(j))?;
            tests.push(WelchTest {
                group_a: groups[i].name.clone(),
                group_b: groups[j].name.clone(),
                metric,
                t,
                df,
                p_value,
                significant: p_value < SIGNIFICANCE_LEVEL,
            });
        }
    }
    Ok(FairnessReport { groups, tests })
}

/// Environment → genre labels, matched by canonical name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Categories(BTreeMap<String, String>);

impl Categories {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_file(path)?, path)
    }

    /// `environment,category` CSV.
    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let schema = |line: u64, message: String| Error::Schema {
            path: path.to_path_buf(),
            line,
            column: 1,
            message,
        };
        let header = rdr.headers().map_err(|e| schema(1, e.to_string()))?;
        if header.len() != 2 || &header[0] != "environment" || &header[1] != "category" {
            return Err(schema(1, "header must be `environment,category`".into()));
        }
        let mut map = BTreeMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| schema(0, e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if map.insert(canonical_key(&record[0]), record[1].to_string()).is_some() {
                return Err(schema(line, format!("duplicate environment {:?}", &record[0])));
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, environment: &str) -> Option<&str> {
        self.0.get(&canonical_key(environment)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const PALETTE: &[&str] = &[
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
];
const UNCATEGORIZED: &str = "uncategorized";
const UNCATEGORIZED_COLOR: &str = "#ffffff";

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected DOT graph of `pairs`: nodes sorted by name and filled by
/// category, edges in input order labeled with the PCC to two decimals.
pub fn export_dot(pairs: &[CorrelatedPair], categories: &Categories) -> String {
    let nodes: BTreeSet<&str> = pairs.iter().flat_map(|p| [p.a.as_str(), p.b.as_str()]).collect();
    let labels: BTreeSet<&str> = nodes.iter().filter_map(|n| categories.get(n)).collect();
    let color_of = |label: &str| {
        labels
            .iter()
            .position(|l| *l == label)
            .map(|i| PALETTE[i % PALETTE.len()])
            .unwrap_or(UNCATEGORIZED_COLOR)
    };
    let mut out = String::from("graph correlations {\n");
    for n in &nodes {
        let category = categories.get(n).unwrap_or(UNCATEGORIZED);
        let _ = writeln!(
            out,
            "  {} [category={}, style=filled, fillcolor={}];",
            quote(n),
            quote(category),
            quote(color_of(category))
        );
    }
    for p in pairs {
        let _ = writeln!(
            out,
            "  {} -- {} [label=\"{:.2}\", style={}];",
            quote(&p.a),
            quote(&p.b),
            p.pcc,
            if p.high { "bold" } else { "solid" }
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str, pcc: f64, high: bool) -> CorrelatedPair {
        CorrelatedPair {
            a: a.into(),
            b: b.into(),
            pcc,
            n_algorithms: 10,
            high,
        }
    }

    #[test]
    fn dot_empty_and_single() {
        assert_eq!(export_dot(&[], &Categories::default()), "graph correlations {\n}\n");
        let dot = export_dot(&[pair("A", "B", 0.95, true)], &Categories::default());
        assert!(dot.contains("\"A\" -- \"B\" [label=\"0.95\", style=bold];"));
        assert_eq!(dot.matches(" -- ").count(), 1);
    }

    #[test]
    fn welch_identical_groups() {
        let (t, _, p) = welch_t_test(&[0.1, 0.2, 0.3], &[0.3, 0.1, 0.2]).unwrap();
        assert_eq!(t, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_reference_value() {
        // Textbook example, checked against an independent implementation.
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let (t, df, p) = welch_t_test(&a, &b).unwrap();
        assert!((t + 2.46).abs() < 0.01, "t = {t}");
        assert!((df - 24.99).abs() < 0.05, "df = {df}");
        assert!((p - 0.021).abs() < 0.001, "p = {p}");
    }

    #[test]
    fn categories_by_canonical_name() {
        let c = Categories::parse(b"environment,category\nMs Pacman,Maze\n", Path::new("c.csv")).unwrap();
        assert_eq!(c.get("MsPacman"), Some("Maze"));
        assert!(Categories::parse(b"env,cat\n", Path::new("c.csv")).is_err());
    }
}
