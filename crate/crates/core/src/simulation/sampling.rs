//! Data generation for the Monte Carlo experiments.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::restriction::RestrictionSet;

/// Seeded, stream-split RNG: ChaCha8 keyed by a 64-bit seed. Stream 0 is
/// reserved for setup draws (the fixed-design matrix); replication `r` uses
/// stream `r`, so parallel and serial runs produce identical results.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// AR(1) covariance: entry `(i, j) = rho^|i-j|` with unit variances.
pub fn ar1_covariance(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "AR(1) parameter must satisfy |rho| < 1, got {rho}"
        )));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| {
        rho.powi((i as i64 - j as i64).unsigned_abs() as i32)
    }))
}

/// The data-generating model: true coefficients, error variance, and
/// predictor covariance (with its Cholesky factor cached for sampling).
#[derive(Debug, Clone)]
pub struct TrueModel {
    beta0: DVector<f64>,
    sigma0_sq: f64,
    sigma0: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det_sigma0: f64,
}

impl TrueModel {
    pub fn new(beta0: DVector<f64>, sigma0_sq: f64, sigma0: DMatrix<f64>) -> Result<Self> {
        let p = beta0.len();
        if sigma0.shape() != (p, p) {
            return Err(Error::Dimension(format!(
                "Sigma0 is {}x{} but beta0 has length {p}",
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        if !sigma0_sq.is_finite() || sigma0_sq <= 0.0 {
            return Err(Error::Domain(format!(
                "sigma0_sq must be positive and finite, got {sigma0_sq}"
            )));
        }
        let chol = sigma0
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let log_det_sigma0 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            beta0,
            sigma0_sq,
            sigma0,
            chol,
            log_det_sigma0,
        })
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }

    pub fn beta0(&self) -> &DVector<f64> {
        &self.beta0
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub(crate) fn chol(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub(crate) fn log_det_sigma0(&self) -> f64 {
        self.log_det_sigma0
    }
}

/// Named coefficient patterns used by the experiment configs.
pub fn sparse6_beta(p: usize) -> Result<DVector<f64>> {
    if p < 6 {
        return Err(Error::Dimension(format!(
            "sparse6 needs p >= 6, got p = {p}"
        )));
    }
    Ok(DVector::from_fn(p, |j, _| if j < 6 { 1.0 } else { 0.0 }))
}

/// Harmonically decaying dense coefficients, `beta_j = 1/j`.
pub fn dense_beta(p: usize) -> DVector<f64> {
    DVector::from_fn(p, |j, _| 1.0 / (j + 1) as f64)
}

/// Error variance that fixes the population R^2 at the target:
/// `sigma0_sq = beta0' Sigma0 beta0 * (1 - r2) / r2`.
pub fn calibrate_sigma0(
    beta0: &DVector<f64>,
    sigma0: &DMatrix<f64>,
    target_r2: f64,
) -> Result<f64> {
    if !target_r2.is_finite() || target_r2 <= 0.0 || target_r2 >= 1.0 {
        return Err(Error::Domain(format!(
            "target R^2 must lie in (0, 1), got {target_r2}"
        )));
    }
    let signal = (sigma0 * beta0).dot(beta0);
    if signal <= 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok(signal * (1.0 - target_r2) / target_r2)
}

/// A coefficient vector satisfying `R beta = r`: the least-norm solution plus
/// the all-ones combination of the null-space basis, so the free directions
/// carry nonzero signal.
pub fn beta_satisfying_restrictions(rest: &RestrictionSet) -> Result<DVector<f64>> {
    let p = rest.p();
    if rest.m() == 0 {
        return Ok(DVector::from_element(p, 1.0));
    }
    let mut rrt = rest.matrix() * rest.matrix().transpose();
    linalg::symmetrize(&mut rrt);
    let base = rest.matrix().transpose()
        * rrt
            .cholesky()
            .ok_or(Error::SingularSystem("R R'"))?
            .solve(rest.rhs());
    let nullspace = linalg::null_space_rows(rest.matrix());
    let ones = DVector::from_element(nullspace.nrows(), 1.0);
    Ok(base + nullspace.transpose() * ones)
}

/// `n` rows drawn iid from `N(0, Sigma0)`.
pub fn sample_design(
    n: usize,
    sigma0: &DMatrix<f64>,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    let chol = sigma0
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(sample_design_with(n, &chol, rng))
}

/// Sampling against a cached Cholesky factor (hot path of the harness).
pub(crate) fn sample_design_with(
    n: usize,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    let l = chol.l();
    let p = l.nrows();
    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let row = &l * &z;
        x.row_mut(i).tr_copy_from(&row);
    }
    x
}

/// `y = X beta0 + eps` with iid `N(0, sigma0_sq)` errors.
pub fn sample_response(x: &DMatrix<f64>, model: &TrueModel, rng: &mut impl Rng) -> DVector<f64> {
    let mut y = x * model.beta0();
    let sd = model.sigma0_sq().sqrt();
    for v in y.iter_mut() {
        *v += sd * rng.sample::<f64, _>(StandardNormal);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ar1_small_cases() {
        assert_eq!(ar1_covariance(3, 0.0).unwrap(), DMatrix::identity(3, 3));
        let s = ar1_covariance(2, 0.5).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        assert!(ar1_covariance(4, 1.0).is_err());
    }

    #[test]
    fn ar1_is_positive_definite() {
        let s = ar1_covariance(5, 0.5).unwrap();
        let eig = s.symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn beta_patterns() {
        assert_eq!(
            sparse6_beta(8).unwrap().as_slice(),
            &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
        );
        assert!(sparse6_beta(5).is_err());
        let d = dense_beta(3);
        assert_relative_eq!(d[1], 0.5);
        assert_relative_eq!(d[2], 1.0 / 3.0);
    }

    #[test]
    fn sigma_calibration() {
        let beta = DVector::from_row_slice(&[1.0, 0.0]);
        let eye = DMatrix::identity(2, 2);
        // target 0.5: sigma0_sq equals the signal
        assert_relative_eq!(calibrate_sigma0(&beta, &eye, 0.5).unwrap(), 1.0);
        // e1, identity, target 0.9 -> 1/9
        assert_relative_eq!(
            calibrate_sigma0(&beta, &eye, 0.9).unwrap(),
            1.0 / 9.0,
            max_relative = 1e-12
        );
        // GR beta with AR(1): 4x the quadratic form at target 0.2
        let b = DVector::from_row_slice(&[2.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
        let s = ar1_covariance(6, 0.5).unwrap();
        let q = (&s * &b).dot(&b);
        assert_relative_eq!(
            calibrate_sigma0(&b, &s, 0.2).unwrap(),
            4.0 * q,
            max_relative = 1e-12
        );
        let zero = DVector::zeros(2);
        assert!(matches!(
            calibrate_sigma0(&zero, &eye, 0.5),
            Err(Error::DegenerateSignal)
        ));
    }

    #[test]
    fn sampling_is_deterministic_given_the_stream() {
        let s = ar1_covariance(3, 0.4).unwrap();
        let a = sample_design(5, &s, &mut substream(9, 1)).unwrap();
        let b = sample_design(5, &s, &mut substream(9, 1)).unwrap();
        assert_eq!(a, b);
        let c = sample_design(5, &s, &mut substream(9, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_match_at_mc_rate() {
        let s = ar1_covariance(3, 0.5).unwrap();
        let n = 100_000;
        let x = sample_design(n, &s, &mut substream(123, 1)).unwrap();
        let bound = 4.0 / (n as f64).sqrt();
        for j in 0..3 {
            let mean = x.column(j).mean();
            assert!(mean.abs() < bound, "column {j} mean {mean}");
        }
        let cov = (x.transpose() * &x) / n as f64;
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (cov[(i, j)] - s[(i, j)]).abs() < 4.0 * bound,
                    "cov[{i},{j}] = {} vs {}",
                    cov[(i, j)],
                    s[(i, j)]
                );
            }
        }
    }

    #[test]
    fn satisfying_beta_respects_restrictions() {
        let rows = [
            crate::restriction::RestrictionExpr::parse("b1 - b2 = 0.5")
                .unwrap()
                .to_row(5)
                .unwrap(),
            crate::restriction::RestrictionExpr::parse("b5 = 0")
                .unwrap()
                .to_row(5)
                .unwrap(),
        ];
        let rest = RestrictionSet::from_rows(&rows, 5).unwrap();
        let beta = beta_satisfying_restrictions(&rest).unwrap();
        assert!(rest.violation(&beta) < 1e-10);
        // free directions carry signal
        assert!(beta.norm() > 0.5);
    }
}
