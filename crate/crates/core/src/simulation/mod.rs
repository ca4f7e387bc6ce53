//! Seeded Monte Carlo harness: data generation, experiment engine,
//! evaluation metrics, optimism estimators, and the signed-rank test.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod optimism;
pub mod sampling;
pub mod wilcoxon;

pub use config::{
    make_beta0, BetaName, BetaSpec, DesignKind, FamilySpec, ResolvedExperiment, RestrictionSpec,
    SignalName, SignalSpec, SimConfig,
};
pub use engine::{
    run_experiment, CriterionSummary, Quantiles, RepEntry, RepResult, SimRun, Summary,
    WilcoxonEntry,
};
pub use metrics::{klf, klr, klr_model_term, rmsef, rmser};
pub use optimism::{mc_optimism, McEstimate, McKind};
pub use sampling::{
    ar1_covariance, beta_satisfying_restrictions, calibrate_sigma0, dense_beta, sample_design,
    sample_response, sparse6_beta, substream, TrueModel,
};
pub use wilcoxon::wilcoxon_signed_rank;
