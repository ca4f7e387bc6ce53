//! Restricted maximum likelihood / restricted least squares estimation.
//!
//! The estimator minimizes `||y - X b||^2` subject to `R b = r`:
//!
//! ```text
//! b_hat     = b_ols + (X'X)^-1 R' [R (X'X)^-1 R']^-1 (r - R b_ols)
//! sigma2hat = ||y - X b_hat||^2 / n
//! ```
//!
//! Every inverse is realized as factor-and-solve (QR of `X`, Cholesky of the
//! small `m x m` system); nothing is inverted explicitly.
//! [`transformed_basis_fit`] computes the same estimator through a change of
//! basis and serves as an independent cross-check of [`fit_restricted`].

use nalgebra::{DMatrix, DVector};

use crate::criteria::ModelDims;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::restriction::RestrictionSet;

/// A fitted model: restricted MLE coefficients plus fit statistics.
#[derive(Debug, Clone)]
pub struct RestrictedFit {
    pub beta_hat: DVector<f64>,
    /// Gaussian MLE of the error variance; always `rss / n`.
    pub sigma_hat_sq: f64,
    pub rss: f64,
    pub n: usize,
    pub p: usize,
    /// Number of restrictions imposed on the fit.
    pub m: usize,
}

impl RestrictedFit {
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            n: self.n,
            p: self.p,
            m: self.m,
        }
    }

    /// Effective number of free coefficients, `p - m`.
    pub fn k(&self) -> usize {
        self.p - self.m
    }
}

/// Diagonals of the hat matrix `H = X (X'X)^-1 X'` and of the restriction
/// adjustment `H_Q = X (X'X)^-1 R' [R (X'X)^-1 R']^-1 R (X'X)^-1 X'`.
/// `H - H_Q` maps the response to the restricted fitted values (up to a
/// deterministic offset when `r != 0`), so `trace(H) = p`, `trace(H_Q) = m`.
#[derive(Debug, Clone)]
pub struct HatDiagnostics {
    pub h_diag: DVector<f64>,
    pub hq_diag: DVector<f64>,
}

/// Thin QR of the design with the rank precondition already checked.
struct DesignQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn design_qr(data: &Dataset) -> Result<DesignQr> {
    let p = data.p();
    let rank = linalg::numerical_rank(data.x());
    if data.n() < p || rank < p {
        return Err(Error::SingularDesign { rank, p });
    }
    let qr = data.x().clone().qr();
    Ok(DesignQr {
        q: qr.q(),
        r: qr.r(),
    })
}

impl DesignQr {
    /// Least squares coefficients for response `b`.
    fn solve_ls(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let qtb = self.q.transpose() * b;
        self.r
            .solve_upper_triangular(&qtb)
            .ok_or(Error::SingularSystem("triangular factor of X"))
    }

    /// Solves `(X'X) A = B` through the triangular factor (`X'X = R'R`).
    fn solve_normal(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let w = self
            .r
            .tr_solve_upper_triangular(b)
            .ok_or(Error::SingularSystem("triangular factor of X"))?;
        self.r
            .solve_upper_triangular(&w)
            .ok_or(Error::SingularSystem("triangular factor of X"))
    }
}

fn finish(data: &Dataset, beta_hat: DVector<f64>, m: usize) -> RestrictedFit {
    let residual = data.y() - data.x() * &beta_hat;
    let rss = residual.norm_squared();
    RestrictedFit {
        sigma_hat_sq: rss / data.n() as f64,
        rss,
        beta_hat,
        n: data.n(),
        p: data.p(),
        m,
    }
}

fn check_p(data: &Dataset, rest: &RestrictionSet) -> Result<()> {
    if rest.p() != data.p() {
        return Err(Error::Dimension(format!(
            "restrictions are over {} coefficients but the design has {} columns",
            rest.p(),
            data.p()
        )));
    }
    Ok(())
}

/// Ordinary least squares on the full design (no restrictions).
pub fn fit_unrestricted(data: &Dataset) -> Result<RestrictedFit> {
    let qr = design_qr(data)?;
    let beta = qr.solve_ls(data.y())?;
    Ok(finish(data, beta, 0))
}

/// Restricted MLE under `R beta = r`.
pub fn fit_restricted(data: &Dataset, rest: &RestrictionSet) -> Result<RestrictedFit> {
    check_p(data, rest)?;
    if rest.m() == 0 {
        return fit_unrestricted(data);
    }
    let qr = design_qr(data)?;
    let beta_f = qr.solve_ls(data.y())?;
    let a = qr.solve_normal(&rest.matrix().transpose())?; // (X'X)^-1 R'
    let mut g = rest.matrix() * &a; // R (X'X)^-1 R'
    linalg::symmetrize(&mut g);
    let chol = g
        .cholesky()
        .ok_or(Error::SingularSystem("R (X'X)^-1 R'"))?;
    let defect = rest.rhs() - rest.matrix() * &beta_f;
    let lambda = chol.solve(&defect);
    let beta = beta_f + a * lambda;
    Ok(finish(data, beta, rest.m()))
}

/// The restricted estimator computed in a transformed basis, used as an
/// independent oracle for [`fit_restricted`].
///
/// The rows of `R` are completed with an orthonormal basis `Rc` of their
/// orthogonal complement; in the basis `Rt = [R; Rc]` the first `m`
/// transformed coefficients are pinned to `(R R')^-1 r` and the remaining
/// `p - m` come from a least squares fit of the offset response on the
/// trailing transformed columns. The coefficients map back through `Rt'`.
pub fn transformed_basis_fit(data: &Dataset, rest: &RestrictionSet) -> Result<RestrictedFit> {
    check_p(data, rest)?;
    let rank = linalg::numerical_rank(data.x());
    if data.n() < data.p() || rank < data.p() {
        return Err(Error::SingularDesign { rank, p: data.p() });
    }
    reduced_basis_fit(data, rest)
}

/// Transformed-basis fit that only requires the reduced `n x (p - m)` design
/// to have full column rank, so it stays solvable when `n < p` but
/// `n >= p - m`. Cross-validation refits go through here.
pub(crate) fn reduced_basis_fit(data: &Dataset, rest: &RestrictionSet) -> Result<RestrictedFit> {
    check_p(data, rest)?;
    let (p, m) = (data.p(), rest.m());
    if m == 0 {
        let rank = linalg::numerical_rank(data.x());
        if data.n() < p || rank < p {
            return Err(Error::SingularDesign { rank, p });
        }
        let qr = data.x().clone().qr();
        let beta = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * data.y()))
            .ok_or(Error::SingularSystem("triangular factor of X"))?;
        return Ok(finish(data, beta, 0));
    }

    let rc = linalg::null_space_rows(rest.matrix()); // (p - m) x p
    let mut rtilde = DMatrix::zeros(p, p);
    rtilde.rows_mut(0, m).copy_from(rest.matrix());
    rtilde.rows_mut(m, p - m).copy_from(&rc);

    let mut rrt = rest.matrix() * rest.matrix().transpose();
    linalg::symmetrize(&mut rrt);
    let rtil = rrt
        .cholesky()
        .ok_or(Error::SingularSystem("R R'"))?
        .solve(rest.rhs());

    let xt = data.x() * rtilde.transpose();
    let mut beta_t = DVector::zeros(p);
    beta_t.rows_mut(0, m).copy_from(&rtil);
    if m < p {
        let xm = xt.columns(0, m).into_owned();
        let xrest = xt.columns(m, p - m).into_owned();
        let rank = linalg::numerical_rank(&xrest);
        if data.n() < p - m || rank < p - m {
            return Err(Error::SingularDesign { rank, p: p - m });
        }
        let y_off = data.y() - &xm * &rtil;
        let qr = xrest.clone().qr();
        let beta_rest = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * y_off))
            .ok_or(Error::SingularSystem("triangular factor of the reduced design"))?;
        beta_t.rows_mut(m, p - m).copy_from(&beta_rest);
    }
    let beta = rtilde.transpose() * beta_t;
    Ok(finish(data, beta, m))
}

/// Diagonals of `H` and `H_Q` for the given design and restrictions.
pub fn hat_diagnostics(data: &Dataset, rest: &RestrictionSet) -> Result<HatDiagnostics> {
    check_p(data, rest)?;
    let n = data.n();
    let qr = design_qr(data)?;
    let h_diag = DVector::from_fn(n, |i, _| qr.q.row(i).norm_squared());
    if rest.m() == 0 {
        return Ok(HatDiagnostics {
            h_diag,
            hq_diag: DVector::zeros(n),
        });
    }
    let a = qr.solve_normal(&rest.matrix().transpose())?;
    let mut g = rest.matrix() * &a;
    linalg::symmetrize(&mut g);
    let chol = g
        .cholesky()
        .ok_or(Error::SingularSystem("R (X'X)^-1 R'"))?;
    let b = data.x() * a; // n x m
    let hq_diag = DVector::from_fn(n, |i, _| {
        let bi = b.row(i).transpose();
        chol.solve(&bi).dot(&bi)
    });
    Ok(HatDiagnostics { h_diag, hq_diag })
}

/// Gaussian MLE of the predictor covariance, `X'X / n`.
pub fn sigma_matrix_mle(x: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert!(x.nrows() >= 1);
    (x.transpose() * x) / x.nrows() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::{equality_restriction, variable_selection_restriction, RestrictionExpr};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn identity_design_interpolates() {
        let y = DVector::from_row_slice(&[1.5, -2.0, 0.25]);
        let data = Dataset::new(DMatrix::identity(3, 3), y.clone()).unwrap();
        let fit = fit_unrestricted(&data).unwrap();
        assert_relative_eq!(fit.beta_hat, y, epsilon = 1e-12);
        assert!(fit.rss.abs() < 1e-24);
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        let data = Dataset::new(x, y).unwrap();
        let fit = fit_unrestricted(&data).unwrap();
        assert_relative_eq!(fit.beta_hat[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_normal_equations() {
        let data = random_dataset(8, 3, 1);
        let fit = fit_unrestricted(&data).unwrap();
        // independent route: LU solve of X'X beta = X'y
        let xtx = data.x().transpose() * data.x();
        let xty = data.x().transpose() * data.y();
        let beta = xtx.lu().solve(&xty).unwrap();
        assert_relative_eq!(fit.beta_hat, beta, epsilon = 1e-10);
        // residual orthogonal to the column space
        let resid = data.y() - data.x() * &fit.beta_hat;
        assert!((data.x().transpose() * resid).amax() < 1e-8);
    }

    #[test]
    fn sigma_hat_is_rss_over_n() {
        let data = random_dataset(12, 4, 2);
        let rest = variable_selection_restriction(2, 4).unwrap();
        let fit = fit_restricted(&data, &rest).unwrap();
        // bit-exact: both fields come from the same arithmetic path
        assert_eq!(fit.sigma_hat_sq, fit.rss / fit.n as f64);
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let mut x = DMatrix::from_fn(6, 3, |i, j| (i + j) as f64);
        // make column 2 a copy of column 0
        for i in 0..6 {
            x[(i, 2)] = x[(i, 0)];
        }
        let data = Dataset::new(x, DVector::zeros(6)).unwrap();
        assert!(matches!(
            fit_unrestricted(&data),
            Err(Error::SingularDesign { rank: 2, p: 3 })
        ));
    }

    #[test]
    fn variable_selection_matches_truncated_ols() {
        let data = random_dataset(15, 5, 3);
        for k in 0..=5usize {
            let rest = variable_selection_restriction(k, 5).unwrap();
            let fit = fit_restricted(&data, &rest).unwrap();
            if k == 0 {
                assert!(fit.beta_hat.amax() < 1e-12);
                assert_relative_eq!(fit.rss, data.y().norm_squared(), max_relative = 1e-12);
                continue;
            }
            let sub = Dataset::new(data.x().columns(0, k).into_owned(), data.y().clone()).unwrap();
            let sub_fit = fit_unrestricted(&sub).unwrap();
            for j in 0..5 {
                let expected = if j < k { sub_fit.beta_hat[j] } else { 0.0 };
                assert_relative_eq!(fit.beta_hat[j], expected, epsilon = 1e-10);
            }
            assert_relative_eq!(fit.rss, sub_fit.rss, max_relative = 1e-10);
        }
    }

    #[test]
    fn full_restriction_pins_beta_to_zero() {
        let data = random_dataset(10, 4, 4);
        let rest = variable_selection_restriction(0, 4).unwrap();
        for fit in [
            fit_restricted(&data, &rest).unwrap(),
            transformed_basis_fit(&data, &rest).unwrap(),
        ] {
            assert!(fit.beta_hat.amax() < 1e-12);
            assert_relative_eq!(fit.rss, data.y().norm_squared(), max_relative = 1e-12);
        }
    }

    #[test]
    fn restricted_fit_satisfies_restrictions_with_nonzero_target() {
        let data = random_dataset(10, 4, 5);
        let exprs = [
            RestrictionExpr::parse("b1 - b2 = 0.5").unwrap(),
            RestrictionExpr::parse("b3 + 2*b4 = 1").unwrap(),
        ];
        let rest = equality_restriction(&exprs, 4).unwrap();
        let fit = fit_restricted(&data, &rest).unwrap();
        assert!(rest.violation(&fit.beta_hat) < 1e-8 * (1.0 + rest.rhs().amax()));

        let oracle = transformed_basis_fit(&data, &rest).unwrap();
        assert_relative_eq!(fit.beta_hat, oracle.beta_hat, epsilon = 1e-10);
        assert_relative_eq!(fit.rss, oracle.rss, max_relative = 1e-10);
    }

    #[test]
    fn transformed_basis_reduces_to_ols_when_unrestricted() {
        let data = random_dataset(9, 3, 6);
        let rest = RestrictionSet::unrestricted(3);
        let a = transformed_basis_fit(&data, &rest).unwrap();
        let b = fit_unrestricted(&data).unwrap();
        assert_eq!(a.m, 0);
        assert_relative_eq!(a.beta_hat, b.beta_hat, epsilon = 1e-12);
    }

    #[test]
    fn restriction_never_decreases_rss() {
        for seed in 0..20u64 {
            let data = random_dataset(12, 4, 100 + seed);
            let full = fit_unrestricted(&data).unwrap();
            let exprs = [RestrictionExpr::parse("b1 = b3").unwrap()];
            let rest = equality_restriction(&exprs, 4).unwrap();
            let fit = fit_restricted(&data, &rest).unwrap();
            assert!(fit.rss >= full.rss - 1e-10 * full.rss.max(1.0));
        }
    }

    #[test]
    fn hat_diagonals_for_orthonormal_design() {
        // columns of Q from a QR of a random matrix are orthonormal
        let raw = random_dataset(9, 3, 7);
        let q = raw.x().clone().qr().q();
        let data = Dataset::new(q.clone(), DVector::zeros(9)).unwrap();
        let rest = RestrictionSet::unrestricted(3);
        let hats = hat_diagnostics(&data, &rest).unwrap();
        for i in 0..9 {
            assert_relative_eq!(hats.h_diag[i], q.row(i).norm_squared(), epsilon = 1e-12);
            assert_eq!(hats.hq_diag[i], 0.0);
        }
    }

    #[test]
    fn hat_traces_and_bounds() {
        let data = random_dataset(9, 3, 8);
        let exprs = [RestrictionExpr::parse("b1 = b2").unwrap()];
        let rest = equality_restriction(&exprs, 3).unwrap();
        let hats = hat_diagnostics(&data, &rest).unwrap();
        assert_relative_eq!(hats.h_diag.sum(), 3.0, max_relative = 1e-8);
        assert_relative_eq!(hats.hq_diag.sum(), 1.0, max_relative = 1e-8);
        for i in 0..9 {
            assert!(hats.hq_diag[i] >= -1e-10);
            assert!(hats.hq_diag[i] <= hats.h_diag[i] + 1e-10);
            assert!(hats.h_diag[i] <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn hq_equals_h_under_full_restriction() {
        let data = random_dataset(8, 3, 9);
        let rest = variable_selection_restriction(0, 3).unwrap();
        let hats = hat_diagnostics(&data, &rest).unwrap();
        assert_relative_eq!(hats.h_diag, hats.hq_diag, epsilon = 1e-10);
    }

    #[test]
    fn sigma_mle_small_cases() {
        let zero = DMatrix::zeros(4, 2);
        assert_eq!(sigma_matrix_mle(&zero), DMatrix::zeros(2, 2));

        let x = DMatrix::from_row_slice(1, 2, &[3.0, -2.0]);
        let s = sigma_matrix_mle(&x);
        let expected = DMatrix::from_row_slice(2, 2, &[9.0, -6.0, -6.0, 4.0]);
        assert_relative_eq!(s, expected, epsilon = 1e-14);
    }

    #[test]
    fn sigma_mle_approaches_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(50, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = sigma_matrix_mle(&x);
        assert!((s - DMatrix::identity(3, 3)).amax() < 4.0 / (50.0f64).sqrt() * 1.5);
    }
}
