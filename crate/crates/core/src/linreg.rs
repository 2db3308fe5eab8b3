//! Small dense least squares.
//!
//! Everything here works on at most [`MAX_COLUMNS`] predictors (plus an
//! optional intercept), solved through the normal equations with a Cholesky
//! factorization. A pivot below `1e-10` times the largest diagonal entry of
//! `XᵀX` is reported as a singular design.
//!
//! Cross-validation shuffles rows with a ChaCha8 permutation seeded by the
//! caller, cuts the permutation into contiguous folds (the first `n % k`
//! folds get one extra row) and averages the per-fold held-out MSE.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_table::{read_file, DatasetProvenance};

pub const MAX_COLUMNS: usize = 16;
/// Cholesky pivots below this fraction of the largest diagonal entry are
/// treated as rank deficiency.
pub const RELATIVE_PIVOT_TOLERANCE: f64 = 1e-10;

const INTERCEPT_NAME: &str = "intercept";

/// Row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    columns: Vec<String>,
    n_rows: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_row_major(columns: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let p = columns.len();
        if p == 0 {
            return Err(Error::invalid("design needs at least one column"));
        }
        if data.len() % p != 0 {
            return Err(Error::invalid(format!(
                "{} values do not fill rows of {p} columns",
                data.len()
            )));
        }
        Ok(Self {
            n_rows: data.len() / p,
            columns,
            data,
        })
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::invalid("ragged design rows"));
        }
        Self::from_row_major(columns, rows.concat())
    }

    /// Columns named `x0, x1, ...`.
    pub fn anonymous(n_cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_row_major((0..n_cols).map(|i| format!("x{i}")).collect(), data)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn column_name(&self, index: usize) -> String {
        self.columns
            .get(index)
            .cloned()
            .unwrap_or_else(|| INTERCEPT_NAME.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    /// In-sample, about the mean of the target in both intercept modes.
    /// NaN when unknown (serialized as null).
    #[serde(with = "nan_as_null")]
    pub r_squared: f64,
    pub cv_mse: Option<f64>,
    /// In-sample mean absolute residual, in log units.
    pub log_mae: Option<f64>,
    pub n_algorithms: usize,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// A fitted linear map from log-normalized environment scores to a
/// log-normalized target: `intercept + Σ coefficient_i * x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub environment_ids: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub stats: FitStats,
    pub constrained_nonnegative: bool,
    /// Checksum of the normalization table the inputs were normalized with.
    pub norms_sha256: Option<String>,
    #[serde(default)]
    pub provenance: DatasetProvenance,
}

impl LinearModel {
    /// A model with no fit statistics, e.g. from a published coefficient table.
    pub fn from_coefficients(
        environment_ids: Vec<String>,
        coefficients: Vec<f64>,
        intercept: Option<f64>,
    ) -> Result<Self> {
        if environment_ids.len() != coefficients.len() {
            return Err(Error::invalid(format!(
                "{} environments but {} coefficients",
                environment_ids.len(),
                coefficients.len()
            )));
        }
        Ok(Self {
            name: None,
            environment_ids,
            coefficients,
            intercept,
            stats: FitStats {
                r_squared: f64::NAN,
                cv_mse: None,
                log_mae: None,
                n_algorithms: 0,
            },
            constrained_nonnegative: false,
            norms_sha256: None,
            provenance: DatasetProvenance::default(),
        })
    }

    /// The model that returns environment `index`'s input unchanged.
    pub fn identity(environment_ids: Vec<String>, index: usize) -> Self {
        let mut coefficients = vec![0.0; environment_ids.len()];
        coefficients[index] = 1.0;
        let mut m = Self::from_coefficients(environment_ids, coefficients, Some(0.0))
            .expect("lengths match");
        m.stats.r_squared = 1.0;
        m.stats.log_mae = Some(0.0);
        m
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn intercept_value(&self) -> f64 {
        self.intercept.unwrap_or(0.0)
    }

    /// No intercept and no negative weight: weakly order preserving.
    pub fn is_monotone(&self) -> bool {
        self.intercept.unwrap_or(0.0) == 0.0 && self.coefficients.iter().all(|&c| c >= 0.0)
    }

    /// Prediction from a fully populated input row aligned with
    /// `environment_ids`.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept_value()
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.environment_ids.len() != model.coefficients.len() {
            return Err(Error::invalid("model environment/coefficient counts differ"));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = read_file(path.as_ref())?;
        let text = String::from_utf8_lossy(&bytes);
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `c + Σ x_i·v_i` over the model's environments; every input must be present.
pub fn predict_linear(model: &LinearModel, x: &[Option<f64>]) -> Result<f64> {
    if x.len() != model.environment_ids.len() {
        return Err(Error::invalid(format!(
            "model takes {} inputs, got {}",
            model.environment_ids.len(),
            x.len()
        )));
    }
    let mut total = model.intercept_value();
    for ((c, v), env) in model.coefficients.iter().zip(x).zip(&model.environment_ids) {
        let v = v.ok_or_else(|| Error::MissingInput {
            environment: env.clone(),
        })?;
        total += c * v;
    }
    Ok(total)
}

fn check_shape(x: &Design, t: &[f64], with_intercept: bool) -> Result<usize> {
    let p = x.n_cols();
    if p > MAX_COLUMNS {
        return Err(Error::invalid(format!(
            "{p} columns exceeds the supported maximum of {MAX_COLUMNS}"
        )));
    }
    if t.len() != x.n_rows() {
        return Err(Error::invalid(format!(
            "{} targets for {} rows",
            t.len(),
            x.n_rows()
        )));
    }
    let q = p + usize::from(with_intercept);
    if x.n_rows() <= q {
        return Err(Error::InsufficientRows {
            rows: x.n_rows(),
            columns: q,
        });
    }
    Ok(q)
}

/// Accumulate `AᵀA` (full symmetric, q×q) and `Aᵀt` for the given rows of
/// `x`, where `A` is `x` with an optional trailing ones column.
fn accumulate_gram(
    x: &[f64],
    p: usize,
    t: &[f64],
    rows: impl Iterator<Item = usize>,
    with_intercept: bool,
    gram: &mut [f64],
    rhs: &mut [f64],
) {
    let q = p + usize::from(with_intercept);
    let mut aug = [0.0f64; MAX_COLUMNS + 1];
    for r in rows {
        aug[..p].copy_from_slice(&x[r * p..(r + 1) * p]);
        if with_intercept {
            aug[p] = 1.0;
        }
        let y = t[r];
        for i in 0..q {
            let ai = aug[i];
            rhs[i] += ai * y;
            let row = &mut gram[i * q..i * q + i + 1];
            for (g, &aj) in row.iter_mut().zip(&aug[..=i]) {
                *g += ai * aj;
            }
        }
    }
}

/// Solve `A x = b` in place for symmetric positive-definite `A` (only the
/// lower triangle is read). On failure returns the index of the column whose
/// pivot fell below the relative tolerance.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], q: usize) -> std::result::Result<(), usize> {
    let max_diag = (0..q).map(|i| a[i * q + i]).fold(0.0, f64::max);
    let tol = RELATIVE_PIVOT_TOLERANCE * max_diag;
    for j in 0..q {
        let mut d = a[j * q + j];
        for k in 0..j {
            d -= a[j * q + k] * a[j * q + k];
        }
        if !(d > tol) {
            return Err(j);
        }
        let l = d.sqrt();
        a[j * q + j] = l;
        for i in j + 1..q {
            let mut s = a[i * q + j];
            for k in 0..j {
                s -= a[i * q + k] * a[j * q + k];
            }
            a[i * q + j] = s / l;
        }
    }
    for i in 0..q {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * q + k] * b[k];
        }
        b[i] = s / a[i * q + i];
    }
    for i in (0..q).rev() {
        let mut s = b[i];
        for k in i + 1..q {
            s -= a[k * q + i] * b[k];
        }
        b[i] = s / a[i * q + i];
    }
    Ok(())
}

fn singular(x: &Design, column: usize) -> Error {
    Error::Singular {
        column: x.column_name(column),
    }
}

fn finish_model(
    x: &Design,
    t: &[f64],
    coefficients: Vec<f64>,
    intercept: Option<f64>,
    constrained: bool,
) -> LinearModel {
    let mut model = LinearModel::from_coefficients(x.columns.clone(), coefficients, intercept)
        .expect("solver returns one coefficient per column");
    model.constrained_nonnegative = constrained;
    model.stats.r_squared = r_squared_dense(&model, x, t);
    let abs_sum: f64 = (0..x.n_rows())
        .map(|i| (t[i] - model.predict_row(x.row(i))).abs())
        .sum();
    model.stats.log_mae = Some(abs_sum / x.n_rows() as f64);
    model.stats.n_algorithms = x.n_rows();
    model
}

/// Unconstrained least squares; `with_intercept = false` pins the intercept
/// to zero.
pub fn fit_ols(x: &Design, t: &[f64], with_intercept: bool) -> Result<LinearModel> {
    let q = check_shape(x, t, with_intercept)?;
    let p = x.n_cols();
    let mut gram = vec![0.0; q * q];
    let mut beta = vec![0.0; q];
    accumulate_gram(&x.data, p, t, 0..x.n_rows(), with_intercept, &mut gram, &mut beta);
    cholesky_solve(&mut gram, &mut beta, q).map_err(|col| singular(x, col))?;
    let intercept = with_intercept.then(|| beta[p]);
    beta.truncate(p);
    Ok(finish_model(x, t, beta, intercept, false))
}

/// Least squares with every coefficient constrained to be non-negative
/// (Lawson–Hanson active set). An intercept, if requested, is unconstrained.
pub fn fit_nnls(x: &Design, t: &[f64], with_intercept: bool) -> Result<LinearModel> {
    let q = check_shape(x, t, with_intercept)?;
    let p = x.n_cols();
    let n = x.n_rows();

    // Rank check on the same system fit_ols would solve.
    let mut gram = vec![0.0; q * q];
    let mut scratch = vec![0.0; q];
    accumulate_gram(&x.data, p, t, 0..n, with_intercept, &mut gram, &mut scratch);
    cholesky_solve(&mut gram, &mut scratch, q).map_err(|col| singular(x, col))?;

    // With an intercept, work on centered data; the intercept then absorbs
    // the means.
    let (x_mean, t_mean) = if with_intercept {
        let mut m = vec![0.0; p];
        for i in 0..n {
            for (mj, v) in m.iter_mut().zip(x.row(i)) {
                *mj += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= n as f64);
        (m, t.iter().sum::<f64>() / n as f64)
    } else {
        (vec![0.0; p], 0.0)
    };
    let mut g = vec![0.0; p * p];
    let mut h = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        let y = t[i] - t_mean;
        for a in 0..p {
            let xa = row[a] - x_mean[a];
            h[a] += xa * y;
            for b in 0..p {
                g[a * p + b] += xa * (row[b] - x_mean[b]);
            }
        }
    }

    let beta = nnls_gram(&g, &h, p);
    let intercept = with_intercept.then(|| {
        t_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>()
    });
    Ok(finish_model(x, t, beta, intercept, true))
}

/// Minimize `½βᵀGβ − hᵀβ` subject to `β ≥ 0`, for positive-definite `G`.
fn nnls_gram(g: &[f64], h: &[f64], p: usize) -> Vec<f64> {
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut beta = vec![0.0; p];
    let mut passive = vec![false; p];
    let mut blocked = vec![false; p];

    let solve_passive = |passive: &[bool]| -> Vec<f64> {
        let idx: Vec<usize> = (0..p).filter(|&i| passive[i]).collect();
        let k = idx.len();
        let mut a = vec![0.0; k * k];
        let mut b = vec![0.0; k];
        for (r, &i) in idx.iter().enumerate() {
            b[r] = h[i];
            for (c, &j) in idx.iter().enumerate() {
                a[r * k + c] = g[i * p + j];
            }
        }
        let mut s = vec![0.0; p];
        // A principal submatrix of a positive-definite G is positive definite.
        if cholesky_solve(&mut a, &mut b, k).is_ok() {
            for (r, &i) in idx.iter().enumerate() {
                s[i] = b[r];
            }
        }
        s
    };

    for _ in 0..(3 * p + 10) {
        let grad: Vec<f64> = (0..p)
            .map(|i| h[i] - (0..p).map(|j| g[i * p + j] * beta[j]).sum::<f64>())
            .collect();
        let Some(j) = (0..p)
            .filter(|&i| !passive[i] && !blocked[i] && grad[i] > tol)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]))
        else {
            break;
        };
        passive[j] = true;
        let mut first = true;
        loop {
            let s = solve_passive(&passive);
            if (0..p).all(|i| !passive[i] || s[i] > 0.0) {
                beta = s;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            if first && s[j] <= 0.0 {
                // The entering variable cannot move off zero: numerically a
                // zero gradient. Skip it until something else changes.
                passive[j] = false;
                blocked[j] = true;
                break;
            }
            first = false;
            let alpha = (0..p)
                .filter(|&i| passive[i] && s[i] <= 0.0)
                .map(|i| beta[i] / (beta[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            let beta_max = beta.iter().fold(0.0f64, |m, v| m.max(*v));
            for i in 0..p {
                if passive[i] {
                    beta[i] += alpha * (s[i] - beta[i]);
                    if beta[i] <= 1e-14 * (1.0 + beta_max) {
                        beta[i] = 0.0;
                        passive[i] = false;
                    }
                }
            }
            if !passive.iter().any(|&v| v) {
                break;
            }
        }
    }
    beta
}

fn r_squared_dense(model: &LinearModel, x: &Design, t: &[f64]) -> f64 {
    let n = t.len();
    let mean = t.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (i, &y) in t.iter().enumerate() {
        let r = y - model.predict_row(x.row(i));
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
    }
    if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// `1 − SS_res / SS_tot`, with `SS_tot` about the mean of `t` whether or not
/// the model has an intercept. Returns 0 when `SS_tot` is 0.
pub fn r_squared(model: &LinearModel, x: &Design, t: &[f64]) -> Result<f64> {
    if x.n_cols() != model.coefficients.len() || x.n_rows() != t.len() || t.is_empty() {
        return Err(Error::invalid("model, design and target dimensions disagree"));
    }
    Ok(r_squared_dense(model, x, t))
}

/// Seeded row permutation used for fold assignment.
pub fn fold_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

/// Fold `f`'s half-open range into the permutation.
pub fn fold_range(n: usize, folds: usize, f: usize) -> std::ops::Range<usize> {
    let base = n / folds;
    let extra = n % folds;
    let start = f * base + f.min(extra);
    start..start + base + usize::from(f < extra)
}

/// Scratch buffers for repeated cross-validation on small systems.
#[derive(Debug, Default)]
pub struct CvWorkspace {
    perm: Vec<usize>,
    perm_key: Option<(usize, u64)>,
    grams: Vec<f64>,
    rhs: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl CvWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn permutation(&mut self, n: usize, seed: u64) -> &[usize] {
        if self.perm_key != Some((n, seed)) {
            self.perm = fold_permutation(n, seed);
            self.perm_key = Some((n, seed));
        }
        &self.perm
    }
}

/// Cross-validated MSE on raw row-major data. On a singular training fold,
/// returns the offending column index (`p` means the intercept).
pub(crate) fn cv_mse_raw(
    x: &[f64],
    p: usize,
    t: &[f64],
    folds: usize,
    seed: u64,
    with_intercept: bool,
    ws: &mut CvWorkspace,
) -> std::result::Result<f64, usize> {
    let n = t.len();
    let q = p + usize::from(with_intercept);
    ws.permutation(n, seed);
    let CvWorkspace {
        perm,
        grams,
        rhs,
        a,
        b,
        ..
    } = ws;

    grams.clear();
    grams.resize(folds * q * q, 0.0);
    rhs.clear();
    rhs.resize(folds * q, 0.0);
    for f in 0..folds {
        let rows = perm[fold_range(n, folds, f)].iter().copied();
        accumulate_gram(
            x,
            p,
            t,
            rows,
            with_intercept,
            &mut grams[f * q * q..(f + 1) * q * q],
            &mut rhs[f * q..(f + 1) * q],
        );
    }

    let mut total = 0.0;
    for f in 0..folds {
        // Training system = sum of the other folds' blocks.
        a.clear();
        a.resize(q * q, 0.0);
        b.clear();
        b.resize(q, 0.0);
        for g in (0..folds).filter(|&g| g != f) {
            for (dst, src) in a.iter_mut().zip(&grams[g * q * q..(g + 1) * q * q]) {
                *dst += src;
            }
            for (dst, src) in b.iter_mut().zip(&rhs[g * q..(g + 1) * q]) {
                *dst += src;
            }
        }
        cholesky_solve(a, b, q)?;
        let intercept = if with_intercept { b[p] } else { 0.0 };
        let held_out = fold_range(n, folds, f);
        let len = held_out.len();
        let sse: f64 = perm[held_out]
            .iter()
            .map(|&r| {
                let row = &x[r * p..(r + 1) * p];
                let pred = intercept + row.iter().zip(&b[..p]).map(|(v, c)| v * c).sum::<f64>();
                (t[r] - pred) * (t[r] - pred)
            })
            .sum();
        total += sse / len as f64;
    }
    Ok(total / folds as f64)
}

/// Mean over `folds` held-out folds of the fold MSE; a pure function of its
/// arguments.
pub fn cross_validated_mse(
    x: &Design,
    t: &[f64],
    folds: usize,
    seed: u64,
    with_intercept: bool,
) -> Result<f64> {
    cross_validated_mse_with(x, t, folds, seed, with_intercept, &mut CvWorkspace::new())
}

pub fn cross_validated_mse_with(
    x: &Design,
    t: &[f64],
    folds: usize,
    seed: u64,
    with_intercept: bool,
    ws: &mut CvWorkspace,
) -> Result<f64> {
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if x.n_cols() > MAX_COLUMNS || t.len() != x.n_rows() {
        return Err(Error::invalid("design/target shape not supported"));
    }
    if x.n_rows() < folds {
        return Err(Error::InsufficientRows {
            rows: x.n_rows(),
            columns: folds,
        });
    }
    cv_mse_raw(&x.data, x.n_cols(), t, folds, seed, with_intercept, ws)
        .map_err(|col| singular(x, col))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: usize, rows: &[&[f64]]) -> Design {
        Design::anonymous(cols, rows.concat()).unwrap()
    }

    #[test]
    fn line_through_origin() {
        let x = design(1, &[&[1.0], &[2.0]]);
        let m = fit_ols(&x, &[2.0, 4.0], false).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-14);
        assert_eq!(m.intercept, None);
        assert!((m.stats.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_target_with_intercept() {
        let x = design(1, &[&[1.0], &[2.0], &[3.0], &[5.0]]);
        let m = fit_ols(&x, &[5.0; 4], true).unwrap();
        assert!(m.coefficients[0].abs() < 1e-12);
        assert!((m.intercept.unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(m.stats.r_squared, 0.0);
    }

    #[test]
    fn singular_names_column() {
        // x1 = 2 * x0
        let x = Design::from_rows(
            vec!["Pong".into(), "Alien".into()],
            &[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]],
        )
        .unwrap();
        match fit_ols(&x, &[1.0, 2.0, 3.0, 4.0], false) {
            Err(Error::Singular { column }) => assert_eq!(column, "Alien"),
            other => panic!("unexpected {other:?}"),
        }
        // A constant column collides with the intercept.
        let x = Design::from_rows(vec!["c".into()], &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        match fit_ols(&x, &[1.0, 2.0, 3.0], true) {
            Err(Error::Singular { column }) => assert_eq!(column, "intercept"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_errors() {
        let x = design(2, &[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            fit_ols(&x, &[1.0, 2.0], false),
            Err(Error::InsufficientRows { .. })
        ));
        let x = Design::anonymous(17, vec![0.0; 17 * 20]).unwrap();
        assert!(fit_ols(&x, &[0.0; 20], false).is_err());
    }

    #[test]
    fn nnls_clamps_negative_slope() {
        let x = design(1, &[&[1.0], &[2.0], &[3.0]]);
        let t = [-1.0, -2.0, -3.0];
        let m = fit_nnls(&x, &t, false).unwrap();
        assert_eq!(m.coefficients, vec![0.0]);
        assert!(m.constrained_nonnegative);
        assert!(m.stats.r_squared <= 0.0);
    }

    #[test]
    fn nnls_recovers_active_coefficient() {
        // t = 3 x0; x1 is noise uncorrelated with t's residual structure.
        let x = design(
            2,
            &[&[1.0, 1.0], &[2.0, -1.0], &[3.0, 1.0], &[4.0, -1.0], &[5.0, 0.0]],
        );
        let t: Vec<f64> = (0..5).map(|i| 3.0 * x.row(i)[0]).collect();
        let m = fit_nnls(&x, &t, false).unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-12);
        assert!(m.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn nnls_matches_ols_when_inactive() {
        let x = design(2, &[&[1.0, 0.5], &[2.0, 1.0], &[3.0, 0.2], &[4.0, 2.0], &[1.5, 1.5]]);
        let t = [1.2, 2.9, 2.8, 5.1, 2.6];
        for intercept in [false, true] {
            let ols = fit_ols(&x, &t, intercept).unwrap();
            assert!(ols.coefficients.iter().all(|&c| c > 0.0));
            let nn = fit_nnls(&x, &t, intercept).unwrap();
            for (a, b) in ols.coefficients.iter().zip(&nn.coefficients) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            assert!((ols.intercept_value() - nn.intercept_value()).abs() < 1e-9);
        }
    }

    #[test]
    fn r_squared_conventions() {
        let x = design(1, &[&[1.0], &[2.0], &[3.0]]);
        let t = [1.0, 2.0, 3.0];
        let perfect = LinearModel::from_coefficients(vec!["x0".into()], vec![1.0], None).unwrap();
        assert_eq!(r_squared(&perfect, &x, &t).unwrap(), 1.0);
        let mean = LinearModel::from_coefficients(vec!["x0".into()], vec![0.0], Some(2.0)).unwrap();
        assert_eq!(r_squared(&mean, &x, &t).unwrap(), 0.0);
    }

    #[test]
    fn fold_ranges_partition_rows() {
        let n = 23;
        let ranges: Vec<_> = (0..10).map(|f| fold_range(n, 10, f)).collect();
        assert_eq!(ranges[0], 0..3);
        assert_eq!(ranges[2], 6..9);
        assert_eq!(ranges[3], 9..11);
        assert_eq!(ranges[9].end, n);
        for w in ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn cv_exact_data_is_zero() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin() + 1.5, (i as f64 * 0.11).cos() + 1.0])
            .collect();
        let x = Design::from_rows(vec!["a".into(), "b".into()], &rows).unwrap();
        let t: Vec<f64> = rows.iter().map(|r| 0.7 * r[0] + 0.2 * r[1]).collect();
        for folds in [2, 5, 10, 30] {
            let mse = cross_validated_mse(&x, &t, folds, 3, false).unwrap();
            assert!(mse < 1e-18, "folds={folds}: {mse}");
        }
    }

    #[test]
    fn cv_leave_one_out_by_hand() {
        // One predictor, no intercept. LOO slope without row i is
        // Σ_{j≠i} x_j t_j / Σ_{j≠i} x_j².
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ts = [1.1, 1.9, 3.2, 3.9, 5.3];
        let sxt: f64 = xs.iter().zip(&ts).map(|(x, t)| x * t).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let loo: f64 = (0..5)
            .map(|i| {
                let slope = (sxt - xs[i] * ts[i]) / (sxx - xs[i] * xs[i]);
                (ts[i] - slope * xs[i]).powi(2)
            })
            .sum::<f64>()
            / 5.0;
        let x = Design::anonymous(1, xs.to_vec()).unwrap();
        let mse = cross_validated_mse(&x, &ts, 5, 42, false).unwrap();
        assert!((mse - loo).abs() < 1e-14, "{mse} vs {loo}");
    }

    #[test]
    fn cv_is_deterministic() {
        let data: Vec<f64> = (0..40).map(|i| ((i * 7919) % 101) as f64 / 50.0).collect();
        let t: Vec<f64> = (0..20).map(|i| ((i * 31) % 17) as f64 / 10.0).collect();
        let x = Design::anonymous(2, data).unwrap();
        let a = cross_validated_mse(&x, &t, 10, 9, true).unwrap();
        let b = cross_validated_mse(&x, &t, 10, 9, true).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = cross_validated_mse(&x, &t, 10, 10, true).unwrap();
        assert_ne!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn cv_argument_checks() {
        let x = Design::anonymous(1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(cross_validated_mse(&x, &[1.0, 2.0, 3.0], 1, 0, false).is_err());
        assert!(cross_validated_mse(&x, &[1.0, 2.0, 3.0], 4, 0, false).is_err());
    }

    #[test]
    fn predict_examples() {
        let m = LinearModel::from_coefficients(
            vec!["Battle Zone".into(), "Name This Game".into(), "Phoenix".into()],
            vec![0.3706, 0.5133, 0.1015],
            None,
        )
        .unwrap();
        assert_eq!(predict_linear(&m, &[Some(0.0); 3]).unwrap(), 0.0);
        assert!((predict_linear(&m, &[Some(1.0); 3]).unwrap() - 0.9854).abs() < 1e-12);
        match predict_linear(&m, &[Some(1.0), None, Some(1.0)]) {
            Err(Error::MissingInput { environment }) => assert_eq!(environment, "Name This Game"),
            other => panic!("unexpected {other:?}"),
        }
        let id = LinearModel::identity(vec!["Battle Zone".into()], 0);
        assert_eq!(predict_linear(&id, &[Some(1.2345)]).unwrap(), 1.2345);
    }

    #[test]
    fn json_round_trip_keeps_bits() {
        let x = design(1, &[&[0.1], &[0.7], &[1.3]]);
        let m = fit_ols(&x, &[0.3, 0.2, 1.9], true).unwrap().with_name("demo");
        let back = LinearModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.coefficients[0].to_bits(), m.coefficients[0].to_bits());
    }
}
