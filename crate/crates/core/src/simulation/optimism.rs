//! Monte Carlo estimators for the expected-optimism closed forms and their
//! component expectations.
//!
//! Per replication the test-error side is evaluated by its closed-form
//! conditional expectation (no test-set sampling), so each estimator is
//! exactly unbiased for its target whenever the truth satisfies the
//! restrictions:
//!
//! ```text
//! fixed  KL: (b-b0)'X'X(b-b0)/s2hat + n s02/s2hat - n
//! fixed  SE: n s02 + ||X(b-b0)||^2 - RSS
//! random KL: n (b-b0)'S0(b-b0)/s2hat + n s02/s2hat - n + n tr(Shat^-1 S0) - np
//! random SE: n s02 + n (b-b0)'S0(b-b0) - RSS
//! ```

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::criteria::{expected_optimism, lemma_expectations, LemmaKind, ModelDims, OptimismKind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{fit_restricted, sigma_matrix_mle};
use crate::restriction::RestrictionSet;
use crate::simulation::sampling::{sample_design_with, sample_response, substream, TrueModel};

/// What a Monte Carlo run estimates: one of the four optimism theorems or
/// one of the four lemma-level component expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McKind {
    Optimism(OptimismKind),
    Component(LemmaKind),
}

impl McKind {
    pub const ALL: [McKind; 8] = [
        McKind::Optimism(OptimismKind::FixedKl),
        McKind::Optimism(OptimismKind::FixedSe),
        McKind::Optimism(OptimismKind::RandomKl),
        McKind::Optimism(OptimismKind::RandomSe),
        McKind::Component(LemmaKind::InvSigmaFixed),
        McKind::Component(LemmaKind::QuadFixed),
        McKind::Component(LemmaKind::TraceRandom),
        McKind::Component(LemmaKind::QuadRandom),
    ];

    pub fn label(self) -> &'static str {
        match self {
            McKind::Optimism(OptimismKind::FixedKl) => "fixed_kl_optimism",
            McKind::Optimism(OptimismKind::FixedSe) => "fixed_se_optimism",
            McKind::Optimism(OptimismKind::RandomKl) => "random_kl_optimism",
            McKind::Optimism(OptimismKind::RandomSe) => "random_se_optimism",
            McKind::Component(LemmaKind::InvSigmaFixed) => "fixed_inverse_variance",
            McKind::Component(LemmaKind::QuadFixed) => "fixed_quadratic_form",
            McKind::Component(LemmaKind::TraceRandom) => "random_trace",
            McKind::Component(LemmaKind::QuadRandom) => "random_quadratic_form",
        }
    }

    /// Whether the design matrix is redrawn every replication.
    pub fn random_design(self) -> bool {
        matches!(
            self,
            McKind::Optimism(OptimismKind::RandomKl)
                | McKind::Optimism(OptimismKind::RandomSe)
                | McKind::Component(LemmaKind::TraceRandom)
                | McKind::Component(LemmaKind::QuadRandom)
        )
    }

    /// The closed-form target of the estimator.
    pub fn target(self, dims: ModelDims, sigma0_sq: f64) -> Result<f64> {
        match self {
            McKind::Optimism(kind) => expected_optimism(kind, dims, sigma0_sq),
            McKind::Component(kind) => lemma_expectations(kind, dims, sigma0_sq),
        }
    }
}

/// Mean and standard error of a Monte Carlo run.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl McEstimate {
    /// Standardized distance from a target value.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Runs `reps` replications and averages the per-replication statistic for
/// `kind`. The truth must satisfy the restrictions (Assumption 1); for fixed
/// kinds one design is drawn from stream 0 and reused, for random kinds the
/// design is redrawn per replication.
pub fn mc_optimism(
    kind: McKind,
    model: &TrueModel,
    rest: &RestrictionSet,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if reps < 2 {
        return Err(Error::Dimension(format!(
            "at least 2 replications required, got {reps}"
        )));
    }
    if rest.p() != model.p() {
        return Err(Error::Dimension(format!(
            "restrictions are over {} coefficients but the model has {}",
            rest.p(),
            model.p()
        )));
    }
    let deviation = rest.violation(model.beta0());
    let tol = 1e-8 * (1.0 + if rest.m() > 0 { rest.rhs().amax() } else { 0.0 });
    if deviation > tol {
        return Err(Error::AssumptionViolation { deviation });
    }
    // fail fast when the dims make the target undefined
    let dims = ModelDims::new(n, model.p(), rest.m())?;
    kind.target(dims, model.sigma0_sq())?;

    let fixed_x = if kind.random_design() {
        None
    } else {
        Some(sample_design_with(n, model.chol(), &mut substream(seed, 0)))
    };

    let values: Vec<f64> = (1..=reps)
        .into_par_iter()
        .map(|rep| {
            replicate(kind, model, rest, n, seed, rep as u64, fixed_x.as_ref()).map_err(|e| {
                Error::Replication {
                    rep,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;

    let mean = values.iter().sum::<f64>() / reps as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let std_error = (ss / (reps as f64 - 1.0)).sqrt() / (reps as f64).sqrt();
    Ok(McEstimate {
        mean,
        std_error,
        reps,
    })
}

fn replicate(
    kind: McKind,
    model: &TrueModel,
    rest: &RestrictionSet,
    n: usize,
    seed: u64,
    rep: u64,
    fixed_x: Option<&DMatrix<f64>>,
) -> Result<f64> {
    let mut rng = substream(seed, rep);
    let x = match fixed_x {
        Some(x) => x.clone(),
        None => sample_design_with(n, model.chol(), &mut rng),
    };
    let y = sample_response(&x, model, &mut rng);
    let data = Dataset::new(x, y)?;
    let fit = fit_restricted(&data, rest)?;

    let nf = n as f64;
    let s02 = model.sigma0_sq();
    let s2 = fit.sigma_hat_sq;
    let d = &fit.beta_hat - model.beta0();

    Ok(match kind {
        McKind::Optimism(OptimismKind::FixedKl) => {
            let quad = (data.x() * &d).norm_squared();
            quad / s2 + nf * s02 / s2 - nf
        }
        McKind::Optimism(OptimismKind::FixedSe) => {
            let quad = (data.x() * &d).norm_squared();
            nf * s02 + quad - fit.rss
        }
        McKind::Optimism(OptimismKind::RandomKl) => {
            let quad = (model.sigma0() * &d).dot(&d);
            let trace = trace_term(data.x(), model)?;
            nf * quad / s2 + nf * s02 / s2 - nf + nf * trace - nf * model.p() as f64
        }
        McKind::Optimism(OptimismKind::RandomSe) => {
            let quad = (model.sigma0() * &d).dot(&d);
            nf * s02 + nf * quad - fit.rss
        }
        McKind::Component(LemmaKind::InvSigmaFixed) => nf * s02 / s2,
        McKind::Component(LemmaKind::QuadFixed) => (data.x() * &d).norm_squared(),
        McKind::Component(LemmaKind::TraceRandom) => trace_term(data.x(), model)?,
        McKind::Component(LemmaKind::QuadRandom) => (model.sigma0() * &d).dot(&d),
    })
}

/// `tr(Sigma_hat^-1 Sigma0)` with `Sigma_hat = X'X/n`.
fn trace_term(x: &DMatrix<f64>, model: &TrueModel) -> Result<f64> {
    let sigma_hat = sigma_matrix_mle(x);
    let chol = sigma_hat.cholesky().ok_or(Error::CovarianceSingularity)?;
    Ok(chol.solve(model.sigma0()).trace())
}
