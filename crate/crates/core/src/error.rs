//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("restriction matrix is rank deficient: numerical rank {rank} < m = {m}")]
    RestrictionRank { rank: usize, m: usize },

    #[error("design matrix is numerically rank deficient: rank {rank} < {p} columns")]
    SingularDesign { rank: usize, p: usize },

    #[error("singular linear system while solving against {0}")]
    SingularSystem(&'static str),

    #[error("full-fit error variance undefined: n = {n} <= p = {p}")]
    UndefinedVariance { n: usize, p: usize },

    #[error("PRESS leverage denominator below 1e-10 at row {row}")]
    LeverageSingularity { row: usize },

    #[error("fold {fold} leaves an unsolvable training system: {source}")]
    FoldDegeneracy { fold: usize, source: Box<Error> },

    #[error("every candidate has a sentinel score under {criterion}")]
    NoFeasibleModel { criterion: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero signal: beta0' Sigma0 beta0 = 0")]
    DegenerateSignal,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("estimated covariance matrix is singular")]
    CovarianceSingularity,

    #[error("true model violates the restrictions: max |R beta0 - r| = {deviation:.3e}")]
    AssumptionViolation { deviation: f64 },

    #[error("too few nonzero differences for the signed-rank test: {nonzero} < 10")]
    InsufficientPairs { nonzero: usize },

    #[error("powerset base has {rows} rows, limit is {max}")]
    PowersetTooLarge { rows: usize, max: usize },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown criterion `{0}`; valid names: aicc, raicc, cp, fpe, rcp, sp, bic, gcv, loocv, tenfold")]
    UnknownCriterion(String),

    #[error("replication {rep}: {source}")]
    Replication { rep: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
