//! Experiment configuration: everything needed to reproduce one simulation.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::restriction::{RestrictionExpr, RestrictionRow};
use crate::selection::{
    nested_restriction_exclusion, nested_subsets, restriction_powerset, CandidateFamily,
};
use crate::simulation::sampling::{
    ar1_covariance, calibrate_sigma0, dense_beta, sparse6_beta, TrueModel,
};

/// Whether the design matrix is drawn once (`fixed`) or redrawn every
/// replication (`random`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Fixed,
    Random,
}

/// True coefficient pattern: a named pattern or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Named(BetaName),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaName {
    /// Six unit slopes in the first six positions.
    Sparse6,
    /// `beta_j = 1/j` for every position.
    Dense,
}

/// Signal strength: a named population-R^2 target or an explicit error
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Named(SignalName),
    /// `sigma0_sq` given directly.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalName {
    /// Population R^2 of 0.2.
    Low,
    /// Population R^2 of 0.9.
    High,
}

/// One restriction row in a config: shorthand text or an explicit row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RestrictionSpec {
    Expr(String),
    Row { coeffs: Vec<f64>, target: f64 },
}

impl RestrictionSpec {
    pub fn to_row(&self, p: usize) -> Result<RestrictionRow> {
        match self {
            RestrictionSpec::Expr(text) => RestrictionExpr::parse(text)?.to_row(p),
            RestrictionSpec::Row { coeffs, target } => {
                if coeffs.len() != p {
                    return Err(Error::Dimension(format!(
                        "restriction row has {} coefficients, expected {p}",
                        coeffs.len()
                    )));
                }
                Ok(RestrictionRow {
                    coeffs: coeffs.clone(),
                    target: *target,
                })
            }
        }
    }
}

/// Candidate-family shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    /// Nested variable-selection subsets `k = 0..=p`.
    Nested,
    /// All subsets of the given base restrictions.
    Powerset(Vec<RestrictionSpec>),
    /// Exclude the given restrictions in a nested fashion.
    NestedExclusion(Vec<RestrictionSpec>),
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    /// AR(1) correlation of the predictors.
    pub rho: f64,
    pub design: DesignKind,
    pub beta: BetaSpec,
    pub signal: SignalSpec,
    pub family: FamilySpec,
    pub criteria: Vec<Criterion>,
    pub reps: usize,
    pub seed: u64,
    /// Criterion pairs compared with the signed-rank test; defaults to
    /// (raicc, aicc) when both are scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilcoxon_pairs: Option<Vec<(Criterion, Criterion)>>,
}

/// Expands a coefficient pattern to a length-`p` vector.
pub fn make_beta0(spec: &BetaSpec, p: usize) -> Result<DVector<f64>> {
    match spec {
        BetaSpec::Named(BetaName::Sparse6) => sparse6_beta(p),
        BetaSpec::Named(BetaName::Dense) => Ok(dense_beta(p)),
        BetaSpec::Explicit(v) => {
            if v.len() != p {
                return Err(Error::Dimension(format!(
                    "explicit coefficient vector has length {}, expected p = {p}",
                    v.len()
                )));
            }
            Ok(DVector::from_row_slice(v))
        }
    }
}

/// A config resolved into concrete simulation inputs.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub model: TrueModel,
    pub family: CandidateFamily,
    /// Labels of rank-deficient powerset subsets that were dropped.
    pub dropped_candidates: Vec<String>,
    pub wilcoxon_pairs: Vec<(Criterion, Criterion)>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.p == 0 {
            return Err(Error::config("p", "must be at least 1"));
        }
        if !self.rho.is_finite() || self.rho.abs() >= 1.0 {
            return Err(Error::config("rho", "must satisfy |rho| < 1"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.criteria.is_empty() {
            return Err(Error::config("criteria", "must name at least one criterion"));
        }
        match &self.beta {
            BetaSpec::Named(BetaName::Sparse6) if self.p < 6 => {
                return Err(Error::config("beta", "sparse6 needs p >= 6"));
            }
            BetaSpec::Explicit(v) if v.len() != self.p => {
                return Err(Error::config(
                    "beta",
                    format!("explicit vector has length {}, expected p = {}", v.len(), self.p),
                ));
            }
            BetaSpec::Explicit(v) if v.iter().any(|x| !x.is_finite()) => {
                return Err(Error::config("beta", "explicit vector has non-finite entries"));
            }
            _ => {}
        }
        if let SignalSpec::Explicit(s) = self.signal {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::config("signal", "sigma0_sq must be positive and finite"));
            }
        }
        if let Some(pairs) = &self.wilcoxon_pairs {
            for (a, b) in pairs {
                if !self.criteria.contains(a) || !self.criteria.contains(b) {
                    return Err(Error::config(
                        "wilcoxon_pairs",
                        format!("pair ({a}, {b}) must name scored criteria"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn beta0(&self) -> Result<DVector<f64>> {
        make_beta0(&self.beta, self.p)
    }

    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate()?;
        let sigma0 = ar1_covariance(self.p, self.rho)?;
        let beta0 = self.beta0()?;
        let sigma0_sq = match self.signal {
            SignalSpec::Named(SignalName::Low) => calibrate_sigma0(&beta0, &sigma0, 0.2)?,
            SignalSpec::Named(SignalName::High) => calibrate_sigma0(&beta0, &sigma0, 0.9)?,
            SignalSpec::Explicit(s) => s,
        };
        let model = TrueModel::new(beta0, sigma0_sq, sigma0)?;

        let (family, dropped_candidates) = match &self.family {
            FamilySpec::Nested => (nested_subsets(self.p)?, Vec::new()),
            FamilySpec::Powerset(specs) => {
                let rows = specs
                    .iter()
                    .map(|s| s.to_row(self.p))
                    .collect::<Result<Vec<_>>>()?;
                restriction_powerset(&rows, self.p)?
            }
            FamilySpec::NestedExclusion(specs) => {
                let rows = specs
                    .iter()
                    .map(|s| s.to_row(self.p))
                    .collect::<Result<Vec<_>>>()?;
                (nested_restriction_exclusion(&rows, self.p)?, Vec::new())
            }
        };

        let wilcoxon_pairs = match &self.wilcoxon_pairs {
            Some(pairs) => pairs.clone(),
            None => {
                let default = (Criterion::Raicc, Criterion::Aicc);
                if self.criteria.contains(&default.0) && self.criteria.contains(&default.1) {
                    vec![default]
                } else {
                    Vec::new()
                }
            }
        };

        Ok(ResolvedExperiment {
            model,
            family,
            dropped_candidates,
            wilcoxon_pairs,
        })
    }
}
