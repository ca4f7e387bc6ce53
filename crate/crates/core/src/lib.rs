//! Restricted least squares and model selection for linear regression.
//!
//! The crate fits Gaussian linear models under linear equality restrictions
//! `R beta = r`, scores candidate restriction sets with information criteria
//! for fixed and random designs (AICc, RAICc, Cp, FPE, RCp, Sp, BIC, GCV,
//! PRESS/LOOCV, K-fold CV), selects the best candidate per criterion, and
//! ships a seeded Monte Carlo harness that verifies the closed-form
//! expected-optimism results the criteria are built on.
//!
//! Variable selection is the special case `R = [0 I]`, `r = 0`; general rows
//! can tie coefficients together or pin weighted combinations.

pub mod criteria;
pub mod dataset;
pub mod error;
pub mod fit;
mod linalg;
pub mod restriction;
pub mod selection;
pub mod simulation;

pub use crate::criteria::{Criterion, CriterionValue, LemmaKind, ModelDims, OptimismKind};
pub use crate::dataset::Dataset;
pub use crate::error::{Error, Result};
pub use crate::fit::{HatDiagnostics, RestrictedFit};
pub use crate::restriction::{RestrictionExpr, RestrictionRow, RestrictionSet};
pub use crate::selection::{CandidateFamily, ChosenModel, SelectionResult};
pub use crate::simulation::{SimConfig, SimRun, Summary, TrueModel};
