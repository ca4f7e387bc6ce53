//! Evaluation metrics: root mean squared error and KL discrepancy, in their
//! fixed-design and random-design forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::RestrictedFit;
use crate::simulation::sampling::TrueModel;

/// Fixed-design RMSE: `sqrt(||X(b_hat - b0)||^2 / n)`.
pub fn rmsef(beta_hat: &DVector<f64>, beta0: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    let d = x * (beta_hat - beta0);
    (d.norm_squared() / x.nrows() as f64).sqrt()
}

/// Random-design RMSE: `sqrt((b_hat - b0)' Sigma0 (b_hat - b0))`.
pub fn rmser(beta_hat: &DVector<f64>, beta0: &DVector<f64>, sigma0: &DMatrix<f64>) -> f64 {
    let d = beta_hat - beta0;
    (sigma0 * &d).dot(&d).max(0.0).sqrt()
}

/// Twice the KL divergence of the fitted conditional model from the truth
/// under a fixed design:
///
/// ```text
/// KLF = n log(s2hat/s02) + ||X(b_hat - b0)||^2 / s2hat + n s02/s2hat - n
/// ```
pub fn klf(fit: &RestrictedFit, model: &TrueModel, x: &DMatrix<f64>) -> f64 {
    let s2 = fit.sigma_hat_sq;
    let s02 = model.sigma0_sq();
    if s2 <= 0.0 {
        return f64::INFINITY;
    }
    let n = fit.n as f64;
    let d = x * (&fit.beta_hat - model.beta0());
    n * (s2 / s02).ln() + d.norm_squared() / s2 + n * s02 / s2 - n
}

/// The restriction-dependent part of [`klr`]: the conditional-model terms
/// with the design-only `Sigma_hat` terms removed.
pub fn klr_model_term(fit: &RestrictedFit, model: &TrueModel) -> f64 {
    let s2 = fit.sigma_hat_sq;
    let s02 = model.sigma0_sq();
    if s2 <= 0.0 {
        return f64::INFINITY;
    }
    let n = fit.n as f64;
    let d = &fit.beta_hat - model.beta0();
    let quad = (model.sigma0() * &d).dot(&d);
    n * (s2 / s02).ln() + n * quad / s2 + n * s02 / s2 - n
}

/// Twice the KL divergence of the fitted joint model (response and
/// predictors) from the truth under a random design:
///
/// ```text
/// KLR = KL-model-term
///     + n log|Sigma_hat| - n log|Sigma0| + n tr(Sigma_hat^-1 Sigma0) - n p
/// ```
///
/// The `Sigma_hat` terms are shared by every candidate within a replication;
/// [`klr_model_term`] isolates the part that differs across candidates.
pub fn klr(fit: &RestrictedFit, sigma_hat: &DMatrix<f64>, model: &TrueModel) -> Result<f64> {
    let p = model.p();
    if sigma_hat.shape() != (p, p) {
        return Err(Error::Dimension(format!(
            "Sigma_hat is {}x{}, expected {p}x{p}",
            sigma_hat.nrows(),
            sigma_hat.ncols()
        )));
    }
    let chol = sigma_hat
        .clone()
        .cholesky()
        .ok_or(Error::CovarianceSingularity)?;
    let log_det_hat = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let trace = chol.solve(model.sigma0()).trace();
    let n = fit.n as f64;
    let cov_term = n * (log_det_hat - model.log_det_sigma0()) + n * trace - n * p as f64;
    Ok(klr_model_term(fit, model) + cov_term)
}
