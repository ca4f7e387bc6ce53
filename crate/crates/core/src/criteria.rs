//! Information criteria for restricted linear models.
//!
//! Every criterion scores a fitted model from its residual sum of squares and
//! the dimensions `(n, p, m)`; smaller is better. The general-restriction
//! forms are used throughout, and with `m = p - k` they reduce exactly to the
//! classical variable-selection forms:
//!
//! ```text
//! AICc  = n log(RSS/n) + n (n+p-m) / (n-p+m-2)
//! RAICc = n log(RSS/n) + n n(n-1) / [(n-p+m-2)(n-p+m-1)]
//! Cp    = RSS + [RSS_full / (n-p)] 2(p-m)
//! FPE   = RSS (n+p-m) / (n-p+m)
//! RCp   = RSS + [RSS_full / (n-p)] (p-m) [2 + (p-m+1)/(n-p+m-1)]
//! Sp    = RSS n(n-1) / [(n-p+m)(n-p+m-1)]
//! BIC   = n log(RSS/n) + log(n) (p-m)
//! GCV   = RSS n^2 / (n-p+m)^2
//! ```
//!
//! A criterion whose degrees-of-freedom denominator is nonpositive returns a
//! `+inf` sentinel so the model is never selected. Log criteria evaluated on
//! an interpolating fit (RSS under the 1e-300 floor) return `-inf` with the
//! `saturated` flag set. Integer parts of each formula are combined in exact
//! integer arithmetic before conversion, which keeps the `m = p - k`
//! reductions bit-for-bit.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{fit_restricted, hat_diagnostics, reduced_basis_fit};
use crate::restriction::RestrictionSet;

/// RSS values below this floor are treated as an exact interpolation.
pub const RSS_FLOOR: f64 = 1e-300;

/// Leverage guard for the PRESS denominator `1 - H_ii + HQ_ii`.
pub const PRESS_DENOM_FLOOR: f64 = 1e-10;

/// Model dimensions: sample size, coefficient count, restriction count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub n: usize,
    pub p: usize,
    pub m: usize,
}

impl ModelDims {
    pub fn new(n: usize, p: usize, m: usize) -> Result<Self> {
        if n == 0 || p == 0 || m > p {
            return Err(Error::Dimension(format!(
                "model dimensions must satisfy n >= 1, p >= 1, 0 <= m <= p; got n={n}, p={p}, m={m}"
            )));
        }
        Ok(Self { n, p, m })
    }

    /// Effective number of free coefficients, `p - m`.
    pub fn k(self) -> usize {
        self.p - self.m
    }

    fn ints(self) -> (i64, i64, i64) {
        (self.n as i64, self.p as i64, self.m as i64)
    }
}

/// The selection rules implemented by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aicc,
    Raicc,
    Cp,
    Fpe,
    Rcp,
    Sp,
    Bic,
    Gcv,
    Loocv,
    TenFold,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::Aicc,
        Criterion::Raicc,
        Criterion::Cp,
        Criterion::Fpe,
        Criterion::Rcp,
        Criterion::Sp,
        Criterion::Bic,
        Criterion::Gcv,
        Criterion::Loocv,
        Criterion::TenFold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aicc => "aicc",
            Criterion::Raicc => "raicc",
            Criterion::Cp => "cp",
            Criterion::Fpe => "fpe",
            Criterion::Rcp => "rcp",
            Criterion::Sp => "sp",
            Criterion::Bic => "bic",
            Criterion::Gcv => "gcv",
            Criterion::Loocv => "loocv",
            Criterion::TenFold => "tenfold",
        }
    }

    /// Parses a comma-separated list of criterion names.
    pub fn parse_list(list: &str) -> Result<Vec<Criterion>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

/// A scored criterion. `value` may be the `+inf` exclusion sentinel (guard
/// fired) or `-inf` (log criterion on a saturated fit).
#[derive(Debug, Clone, Copy)]
pub struct CriterionValue {
    pub name: Criterion,
    pub value: f64,
    pub dims: ModelDims,
    /// Set when the fit interpolated (RSS below the floor) and a log
    /// criterion saturated to `-inf`.
    pub saturated: bool,
}

impl CriterionValue {
    fn finite(name: Criterion, value: f64, dims: ModelDims) -> Self {
        Self {
            name,
            value,
            dims,
            saturated: false,
        }
    }

    fn excluded(name: Criterion, dims: ModelDims) -> Self {
        Self {
            name,
            value: f64::INFINITY,
            dims,
            saturated: false,
        }
    }

    fn saturated_fit(name: Criterion, dims: ModelDims) -> Self {
        Self {
            name,
            value: f64::NEG_INFINITY,
            dims,
            saturated: true,
        }
    }

    /// True when the guard fired and the model must not be selected.
    pub fn is_excluded(&self) -> bool {
        self.value == f64::INFINITY
    }
}

pub fn aicc(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    let den = n - p + m - 2;
    if den <= 0 {
        return CriterionValue::excluded(Criterion::Aicc, dims);
    }
    if rss < RSS_FLOOR {
        return CriterionValue::saturated_fit(Criterion::Aicc, dims);
    }
    let nf = n as f64;
    let value = nf * (rss / nf).ln() + nf * ((n + p - m) as f64) / (den as f64);
    CriterionValue::finite(Criterion::Aicc, value, dims)
}

pub fn raicc(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    let d1 = n - p + m - 2;
    let d2 = n - p + m - 1;
    if d1 <= 0 {
        return CriterionValue::excluded(Criterion::Raicc, dims);
    }
    if rss < RSS_FLOOR {
        return CriterionValue::saturated_fit(Criterion::Raicc, dims);
    }
    let nf = n as f64;
    let value = nf * (rss / nf).ln() + nf * ((n * (n - 1)) as f64) / ((d1 * d2) as f64);
    CriterionValue::finite(Criterion::Raicc, value, dims)
}

pub fn cp(rss: f64, rss_full: f64, dims: ModelDims) -> Result<CriterionValue> {
    let (n, p, m) = dims.ints();
    if n <= p {
        return Err(Error::UndefinedVariance {
            n: dims.n,
            p: dims.p,
        });
    }
    let value = rss + rss_full / ((n - p) as f64) * ((2 * (p - m)) as f64);
    Ok(CriterionValue::finite(Criterion::Cp, value, dims))
}

pub fn fpe(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    let den = n - p + m;
    if den <= 0 {
        return CriterionValue::excluded(Criterion::Fpe, dims);
    }
    let value = rss * ((n + p - m) as f64) / (den as f64);
    CriterionValue::finite(Criterion::Fpe, value, dims)
}

pub fn rcp(rss: f64, rss_full: f64, dims: ModelDims) -> Result<CriterionValue> {
    let (n, p, m) = dims.ints();
    if n <= p {
        return Err(Error::UndefinedVariance {
            n: dims.n,
            p: dims.p,
        });
    }
    let den = n - p + m - 1;
    if den <= 0 {
        return Ok(CriterionValue::excluded(Criterion::Rcp, dims));
    }
    let km = p - m;
    let factor = km as f64 * (2.0 + ((km + 1) as f64) / (den as f64));
    let value = rss + rss_full / ((n - p) as f64) * factor;
    Ok(CriterionValue::finite(Criterion::Rcp, value, dims))
}

pub fn sp(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    let d1 = n - p + m;
    let d2 = n - p + m - 1;
    if d2 <= 0 {
        return CriterionValue::excluded(Criterion::Sp, dims);
    }
    let value = rss * ((n * (n - 1)) as f64) / ((d1 * d2) as f64);
    CriterionValue::finite(Criterion::Sp, value, dims)
}

pub fn bic(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    if rss < RSS_FLOOR {
        return CriterionValue::saturated_fit(Criterion::Bic, dims);
    }
    let nf = n as f64;
    // penalty counts the p - m free slopes only, no +1 for the variance
    let value = nf * (rss / nf).ln() + nf.ln() * ((p - m) as f64);
    CriterionValue::finite(Criterion::Bic, value, dims)
}

pub fn gcv(rss: f64, dims: ModelDims) -> CriterionValue {
    let (n, p, m) = dims.ints();
    let den = n - p + m;
    if den <= 0 {
        return CriterionValue::excluded(Criterion::Gcv, dims);
    }
    let value = rss * ((n * n) as f64) / ((den * den) as f64);
    CriterionValue::finite(Criterion::Gcv, value, dims)
}

/// Closed-form leave-one-out cross-validation: the PRESS statistic
/// `sum_i [(y_i - x_i' b_hat) / (1 - H_ii + HQ_ii)]^2`.
pub fn press(data: &Dataset, rest: &RestrictionSet) -> Result<CriterionValue> {
    let fit = fit_restricted(data, rest)?;
    let hats = hat_diagnostics(data, rest)?;
    let fitted = data.x() * &fit.beta_hat;
    let mut total = 0.0;
    for i in 0..data.n() {
        let denom = 1.0 - hats.h_diag[i] + hats.hq_diag[i];
        if denom.abs() < PRESS_DENOM_FLOOR {
            return Err(Error::LeverageSingularity { row: i + 1 });
        }
        let e = (data.y()[i] - fitted[i]) / denom;
        total += e * e;
    }
    Ok(CriterionValue::finite(Criterion::Loocv, total, fit.dims()))
}

/// Held-out squared error of one cross-validation fold.
#[derive(Debug, Clone, Copy)]
pub struct FoldError {
    pub fold: usize,
    pub sse: f64,
    pub points: usize,
}

/// Deterministic fold labels: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assign = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assign[i] = pos % folds;
    }
    assign
}

/// Per-fold held-out squared errors for K-fold cross-validation. Training
/// refits go through the transformed basis, so a split stays solvable as
/// long as it keeps `n_train >= p - m` independent rows.
pub fn kfold_cv_folds(
    data: &Dataset,
    rest: &RestrictionSet,
    folds: usize,
    seed: u64,
) -> Result<Vec<FoldError>> {
    let n = data.n();
    if folds < 2 || folds > n {
        return Err(Error::Dimension(format!(
            "fold count {folds} must satisfy 2 <= folds <= n = {n}"
        )));
    }
    let assign = fold_assignment(n, folds, seed);
    let mut out = Vec::with_capacity(folds);
    for f in 0..folds {
        let test_rows: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        let train_rows: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let train = data.select_rows(&train_rows);
        let fit = reduced_basis_fit(&train, rest).map_err(|e| Error::FoldDegeneracy {
            fold: f + 1,
            source: Box::new(e),
        })?;
        let mut sse = 0.0;
        for &i in &test_rows {
            let pred = data.x().row(i).transpose().dot(&fit.beta_hat);
            let e = data.y()[i] - pred;
            sse += e * e;
        }
        out.push(FoldError {
            fold: f + 1,
            sse,
            points: test_rows.len(),
        });
    }
    Ok(out)
}

/// Seeded K-fold cross-validation; the value is the mean squared held-out
/// prediction error over all `n` points. With `folds = n` this is `PRESS/n`.
pub fn kfold_cv(
    data: &Dataset,
    rest: &RestrictionSet,
    folds: usize,
    seed: u64,
) -> Result<CriterionValue> {
    let per_fold = kfold_cv_folds(data, rest, folds, seed)?;
    let total: f64 = per_fold.iter().map(|f| f.sse).sum();
    let dims = ModelDims {
        n: data.n(),
        p: data.p(),
        m: rest.m(),
    };
    Ok(CriterionValue::finite(
        Criterion::TenFold,
        total / data.n() as f64,
        dims,
    ))
}

/// The four expected-optimism closed forms (KL and squared error, under
/// fixed and random designs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimismKind {
    FixedKl,
    FixedSe,
    RandomKl,
    RandomSe,
}

/// Expected optimism of the restricted fit when the truth satisfies the
/// restrictions:
///
/// ```text
/// fixed KL:  n (n+p-m)/(n-p+m-2) - n
/// fixed SE:  2 sigma0^2 (p-m)
/// random KL: n n(n-1)/[(n-p+m-2)(n-p+m-1)] + n np/(n-p-1) - n(p+1)
/// random SE: sigma0^2 (p-m) [2 + (p-m+1)/(n-p+m-1)]
/// ```
pub fn expected_optimism(kind: OptimismKind, dims: ModelDims, sigma0_sq: f64) -> Result<f64> {
    let (n, p, m) = dims.ints();
    let nf = n as f64;
    let guard = |den: i64, what: &str| -> Result<i64> {
        if den <= 0 {
            Err(Error::Domain(format!(
                "{what} requires a positive denominator, got {den} at n={n}, p={p}, m={m}"
            )))
        } else {
            Ok(den)
        }
    };
    match kind {
        OptimismKind::FixedKl => {
            let den = guard(n - p + m - 2, "fixed-design KL optimism")?;
            Ok(nf * ((n + p - m) as f64) / (den as f64) - nf)
        }
        OptimismKind::FixedSe => Ok(2.0 * sigma0_sq * ((p - m) as f64)),
        OptimismKind::RandomKl => {
            let d1 = guard(n - p + m - 2, "random-design KL optimism")?;
            let d2 = guard(n - p + m - 1, "random-design KL optimism")?;
            let d3 = guard(n - p - 1, "random-design KL optimism")?;
            Ok(nf * ((n * (n - 1)) as f64) / ((d1 * d2) as f64)
                + nf * ((n * p) as f64) / (d3 as f64)
                - (n * (p + 1)) as f64)
        }
        OptimismKind::RandomSe => {
            let den = guard(n - p + m - 1, "random-design SE optimism")?;
            let km = (p - m) as f64;
            Ok(sigma0_sq * km * (2.0 + (km + 1.0) / (den as f64)))
        }
    }
}

/// The component expectations behind the optimism theorems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// `n sigma0^2 E[1/sigma2hat] = n^2/(n-p+m-2)` (fixed design).
    InvSigmaFixed,
    /// `E[(b_hat-b0)' X'X (b_hat-b0)] = sigma0^2 (p-m)` (fixed design).
    QuadFixed,
    /// `E[trace(Sigma_hat^-1 Sigma0)] = np/(n-p-1)` (random design).
    TraceRandom,
    /// `E[(b_hat-b0)' Sigma0 (b_hat-b0)] = sigma0^2 (p-m)/(n-p+m-1)`.
    QuadRandom,
}

pub fn lemma_expectations(kind: LemmaKind, dims: ModelDims, sigma0_sq: f64) -> Result<f64> {
    let (n, p, m) = dims.ints();
    let guard = |den: i64, what: &str| -> Result<i64> {
        if den <= 0 {
            Err(Error::Domain(format!(
                "{what} requires a positive denominator, got {den} at n={n}, p={p}, m={m}"
            )))
        } else {
            Ok(den)
        }
    };
    match kind {
        LemmaKind::InvSigmaFixed => {
            let den = guard(n - p + m - 2, "inverse-variance expectation")?;
            Ok((n as f64) * (n as f64) / (den as f64))
        }
        LemmaKind::QuadFixed => Ok(sigma0_sq * ((p - m) as f64)),
        LemmaKind::TraceRandom => {
            let den = guard(n - p - 1, "trace expectation")?;
            Ok(((n * p) as f64) / (den as f64))
        }
        LemmaKind::QuadRandom => {
            let den = guard(n - p + m - 1, "quadratic-form expectation")?;
            Ok(sigma0_sq * ((p - m) as f64) / (den as f64))
        }
    }
}
