//! End-to-end harness checks: selection consistency at a well-separated
//! setting, and the sampling oracle for the closed-form KL.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use regsel::criteria::Criterion;
use regsel::fit::fit_restricted;
use regsel::restriction::variable_selection_restriction;
use regsel::simulation::{
    ar1_covariance, klf, run_experiment, sample_design, sample_response, substream, BetaSpec,
    DesignKind, FamilySpec, SignalSpec, SimConfig, TrueModel,
};
use regsel::Dataset;

#[test]
fn strong_signal_nested_selection_recovers_k3() {
    // truth has exactly three unit slopes, high signal, small n: the
    // finite-sample penalties bind, so both KL criteria concentrate on k=3.
    // (At n >> p the same criteria keep a 15-25% overfit probability, so no
    // sample size makes the recovery rate approach 1; n=25 is the
    // well-separated regime.)
    let mut beta = vec![0.0; 10];
    beta[..3].copy_from_slice(&[1.0, 1.0, 1.0]);
    let config = SimConfig {
        n: 25,
        p: 10,
        rho: 0.5,
        design: DesignKind::Random,
        beta: BetaSpec::Explicit(beta),
        signal: SignalSpec::Named(regsel::simulation::SignalName::High),
        family: FamilySpec::Nested,
        criteria: vec![Criterion::Raicc, Criterion::Aicc],
        reps: 100,
        seed: 2024,
        wilcoxon_pairs: None,
    };
    let run = run_experiment(&config).unwrap();
    for (ci, &criterion) in config.criteria.iter().enumerate() {
        let exact: usize = run
            .results
            .iter()
            .filter(|r| r.entries[ci].k == 3)
            .count();
        assert!(
            exact >= 90,
            "{criterion} picked k=3 in only {exact}/100 replications"
        );
        let mean_k = run.summary.criteria[ci].mean_k;
        assert!(
            (2.9..=3.5).contains(&mean_k),
            "{criterion} mean selected k = {mean_k}"
        );
    }
}

#[test]
fn klf_closed_form_matches_sampling_estimate() {
    // one random fit; the closed form must sit within 3 MC standard errors
    // of a direct sampling estimate of the expected log-likelihood gap
    let p = 3;
    let n = 12;
    let sigma0 = ar1_covariance(p, 0.5).unwrap();
    let beta0 = DVector::from_row_slice(&[1.0, -0.5, 0.25]);
    let model = TrueModel::new(beta0, 0.7, sigma0).unwrap();

    let mut rng = substream(55, 1);
    let x = sample_design(n, model.sigma0(), &mut rng).unwrap();
    let y = sample_response(&x, &model, &mut rng);
    let data = Dataset::new(x.clone(), y).unwrap();
    let rest = variable_selection_restriction(2, p).unwrap();
    let fit = fit_restricted(&data, &rest).unwrap();

    let closed = klf(&fit, &model, &x);

    // sampling oracle: ytilde = X beta0 + eps, averaged integrand
    // 2 log f(ytilde | truth) - 2 log f(ytilde | fit)
    let draws = 200_000;
    let mu0 = &x * model.beta0();
    let muhat = &x * &fit.beta_hat;
    let d = &mu0 - &muhat;
    let s02 = model.sigma0_sq();
    let s2 = fit.sigma_hat_sq;
    let log_ratio = (s2 / s02).ln() * n as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut rng = substream(55, 2);
    for _ in 0..draws {
        let mut res_fit = 0.0;
        let mut res_truth = 0.0;
        for i in 0..n {
            let e: f64 = rng.sample::<f64, _>(StandardNormal) * s02.sqrt();
            let r = d[i] + e;
            res_fit += r * r;
            res_truth += e * e;
        }
        let v = log_ratio + res_fit / s2 - res_truth / s02;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq - sum * sum / draws as f64) / (draws as f64 - 1.0);
    let se = (var / draws as f64).sqrt();
    assert!(
        (closed - mean).abs() <= 3.0 * se,
        "closed form {closed} vs sampled {mean} +- {se}"
    );
}

#[test]
fn replication_error_names_the_rep() {
    // p = n forces a singular unrestricted fit inside every replication
    let config = SimConfig {
        n: 4,
        p: 4,
        rho: 0.0,
        design: DesignKind::Random,
        beta: BetaSpec::Explicit(vec![1.0, 0.0, 0.0, 0.0]),
        signal: SignalSpec::Explicit(1.0),
        family: FamilySpec::Nested,
        criteria: vec![Criterion::Cp],
        reps: 3,
        seed: 8,
        wilcoxon_pairs: None,
    };
    let err = run_experiment(&config).unwrap_err();
    assert!(matches!(err, regsel::Error::Replication { .. }), "{err}");
}
