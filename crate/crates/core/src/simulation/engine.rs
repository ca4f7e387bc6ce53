//! The replication loop: draw data, score candidates, select, evaluate.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::Criterion;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{fit_restricted, sigma_matrix_mle};
use crate::selection::select_with_fits;
use crate::simulation::config::{DesignKind, ResolvedExperiment, SimConfig};
use crate::simulation::metrics::{klf, klr, klr_model_term, rmsef, rmser};
use crate::simulation::sampling::{sample_design_with, sample_response, substream};
use crate::simulation::wilcoxon::wilcoxon_signed_rank;

/// Outcome of one criterion within one replication.
#[derive(Debug, Clone, Serialize)]
pub struct RepEntry {
    pub criterion: Criterion,
    pub label: String,
    pub m: usize,
    pub k: usize,
    /// RMSEF under a fixed design, RMSER under a random design.
    pub rmse: f64,
    /// KL discrepancy of the selected fit (KLF or KLR per design).
    pub kl: f64,
    /// `ln(kl)`; `-inf` when the KL is exactly zero.
    pub log_kl: f64,
    /// Log of the restriction-dependent part of the KL; equal to `log_kl`
    /// under a fixed design.
    pub log_kl_model: f64,
}

/// All criterion outcomes of one replication.
#[derive(Debug, Clone, Serialize)]
pub struct RepResult {
    pub rep: usize,
    pub entries: Vec<RepEntry>,
}

/// Five-number summary for boxplot-style export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quantiles {
    fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let at = |q: f64| -> f64 {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] * (1.0 - frac) + sorted[hi] * frac
        };
        Some(Self {
            min: sorted[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Per-criterion aggregates over all replications.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionSummary {
    pub criterion: Criterion,
    pub mean_rmse: f64,
    /// Mean over replications with finite log KL; `None` if none were finite.
    pub mean_log_kl: Option<f64>,
    /// Replications whose log KL was nonfinite and excluded from the mean.
    pub log_kl_excluded: usize,
    pub mean_k: f64,
    pub mean_m: f64,
    pub rmse_quantiles: Quantiles,
    pub log_kl_quantiles: Option<Quantiles>,
    pub size_quantiles: Quantiles,
}

/// A signed-rank comparison of two criteria on one metric.
#[derive(Debug, Clone, Serialize)]
pub struct WilcoxonEntry {
    pub a: Criterion,
    pub b: Criterion,
    pub metric: &'static str,
    /// `None` when fewer than ten informative pairs remain.
    pub p_value: Option<f64>,
    pub pairs_used: usize,
}

/// Experiment-level aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub reps: usize,
    pub criteria: Vec<CriterionSummary>,
    pub wilcoxon: Vec<WilcoxonEntry>,
    pub dropped_candidates: Vec<String>,
}

/// A finished experiment: per-replication results plus the summary.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub results: Vec<RepResult>,
    pub summary: Summary,
}

/// Runs the configured experiment. Deterministic given the seed: replication
/// `r` draws from stream `r`, the fixed design (if any) from stream 0, and
/// each replication derives its own CV fold seed from its stream.
pub fn run_experiment(config: &SimConfig) -> Result<SimRun> {
    let resolved = config.resolve()?;
    let fixed_x = match config.design {
        DesignKind::Fixed => Some(sample_design_with(
            config.n,
            resolved.model.chol(),
            &mut substream(config.seed, 0),
        )),
        DesignKind::Random => None,
    };

    let results: Vec<RepResult> = (1..=config.reps)
        .into_par_iter()
        .map(|rep| {
            run_one(rep, config, &resolved, fixed_x.as_ref()).map_err(|e| Error::Replication {
                rep,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let summary = summarize(config, &resolved, &results);
    Ok(SimRun { results, summary })
}

fn run_one(
    rep: usize,
    config: &SimConfig,
    resolved: &ResolvedExperiment,
    fixed_x: Option<&DMatrix<f64>>,
) -> Result<RepResult> {
    let model = &resolved.model;
    let mut rng = substream(config.seed, rep as u64);
    let x = match fixed_x {
        Some(x) => x.clone(),
        None => sample_design_with(config.n, model.chol(), &mut rng),
    };
    let y = sample_response(&x, model, &mut rng);
    let fold_seed: u64 = rng.random();
    let data = Dataset::new(x, y)?;

    let fits = resolved
        .family
        .candidates()
        .iter()
        .map(|c| fit_restricted(&data, &c.restriction))
        .collect::<Result<Vec<_>>>()?;
    let selection = select_with_fits(&data, &resolved.family, &fits, &config.criteria, fold_seed)?;

    let sigma_hat = match config.design {
        DesignKind::Random => Some(sigma_matrix_mle(data.x())),
        DesignKind::Fixed => None,
    };

    let mut entries = Vec::with_capacity(selection.chosen.len());
    for chosen in &selection.chosen {
        let fit = &fits[chosen.index];
        let (rmse, kl, kl_model) = match config.design {
            DesignKind::Fixed => {
                let v = klf(fit, model, data.x());
                (rmsef(&fit.beta_hat, model.beta0(), data.x()), v, v)
            }
            DesignKind::Random => (
                rmser(&fit.beta_hat, model.beta0(), model.sigma0()),
                klr(fit, sigma_hat.as_ref().expect("random design"), model)?,
                klr_model_term(fit, model),
            ),
        };
        entries.push(RepEntry {
            criterion: chosen.criterion,
            label: chosen.label.clone(),
            m: chosen.m,
            k: chosen.k,
            rmse,
            kl,
            log_kl: log_or_neg_inf(kl),
            log_kl_model: log_or_neg_inf(kl_model),
        });
    }
    Ok(RepResult { rep, entries })
}

/// `ln(v)` with exact zeros (and tiny negative rounding residue) mapped to
/// the `-inf` sentinel.
fn log_or_neg_inf(v: f64) -> f64 {
    if v <= 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

fn summarize(config: &SimConfig, resolved: &ResolvedExperiment, results: &[RepResult]) -> Summary {
    let mut criteria_summaries = Vec::with_capacity(config.criteria.len());
    for (ci, &criterion) in config.criteria.iter().enumerate() {
        let entries: Vec<&RepEntry> = results.iter().map(|r| &r.entries[ci]).collect();
        debug_assert!(entries.iter().all(|e| e.criterion == criterion));
        let rmse: Vec<f64> = entries.iter().map(|e| e.rmse).collect();
        let ks: Vec<f64> = entries.iter().map(|e| e.k as f64).collect();
        let ms: Vec<f64> = entries.iter().map(|e| e.m as f64).collect();
        let log_kl: Vec<f64> = entries
            .iter()
            .map(|e| e.log_kl)
            .filter(|v| v.is_finite())
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        criteria_summaries.push(CriterionSummary {
            criterion,
            mean_rmse: mean(&rmse),
            mean_log_kl: (!log_kl.is_empty()).then(|| mean(&log_kl)),
            log_kl_excluded: entries.len() - log_kl.len(),
            mean_k: mean(&ks),
            mean_m: mean(&ms),
            rmse_quantiles: Quantiles::from_values(&rmse).expect("reps >= 1"),
            log_kl_quantiles: Quantiles::from_values(&log_kl),
            size_quantiles: Quantiles::from_values(&ks).expect("reps >= 1"),
        });
    }

    let mut wilcoxon = Vec::new();
    for &(a, b) in &resolved.wilcoxon_pairs {
        let ia = config.criteria.iter().position(|&c| c == a);
        let ib = config.criteria.iter().position(|&c| c == b);
        let (Some(ia), Some(ib)) = (ia, ib) else {
            continue;
        };
        for (metric, pick) in [
            ("rmse", (|e: &RepEntry| e.rmse) as fn(&RepEntry) -> f64),
            ("log_kl", |e: &RepEntry| e.log_kl),
        ] {
            let mut va = Vec::with_capacity(results.len());
            let mut vb = Vec::with_capacity(results.len());
            for r in results {
                let x = pick(&r.entries[ia]);
                let y = pick(&r.entries[ib]);
                if x.is_finite() && y.is_finite() {
                    va.push(x);
                    vb.push(y);
                }
            }
            let p_value = match wilcoxon_signed_rank(&va, &vb) {
                Ok(p) => Some(p),
                Err(Error::InsufficientPairs { .. }) => None,
                Err(_) => None,
            };
            wilcoxon.push(WilcoxonEntry {
                a,
                b,
                metric,
                p_value,
                pairs_used: va.len(),
            });
        }
    }

    Summary {
        reps: results.len(),
        criteria: criteria_summaries,
        wilcoxon,
        dropped_candidates: resolved.dropped_candidates.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::config::{BetaName, BetaSpec, FamilySpec, SignalName, SignalSpec};

    fn tiny_config() -> SimConfig {
        SimConfig {
            n: 25,
            p: 6,
            rho: 0.5,
            design: DesignKind::Random,
            beta: BetaSpec::Named(BetaName::Sparse6),
            signal: SignalSpec::Named(SignalName::High),
            family: FamilySpec::Nested,
            criteria: vec![Criterion::Raicc, Criterion::Aicc, Criterion::Sp],
            reps: 8,
            seed: 99,
            wilcoxon_pairs: None,
        }
    }

    #[test]
    fn reruns_are_identical() {
        for design in [DesignKind::Random, DesignKind::Fixed] {
            let mut cfg = tiny_config();
            cfg.design = design;
            let a = run_experiment(&cfg).unwrap();
            let b = run_experiment(&cfg).unwrap();
            for (ra, rb) in a.results.iter().zip(&b.results) {
                for (ea, eb) in ra.entries.iter().zip(&rb.entries) {
                    assert_eq!(ea.label, eb.label);
                    assert_eq!(ea.rmse, eb.rmse);
                    assert_eq!(ea.log_kl, eb.log_kl);
                }
            }
        }
    }

    #[test]
    fn fixed_design_reuses_one_x() {
        let mut cfg = tiny_config();
        cfg.design = DesignKind::Fixed;
        cfg.reps = 4;
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(run.results.len(), 4);
        // fixed design: log_kl_model coincides with log_kl
        for r in &run.results {
            for e in &r.entries {
                assert_eq!(e.log_kl, e.log_kl_model);
            }
        }
    }

    #[test]
    fn single_rep_summary_echoes_the_rep() {
        let mut cfg = tiny_config();
        cfg.reps = 1;
        cfg.criteria = vec![Criterion::Raicc];
        let run = run_experiment(&cfg).unwrap();
        let entry = &run.results[0].entries[0];
        let summary = &run.summary.criteria[0];
        assert_eq!(summary.mean_rmse, entry.rmse);
        assert_eq!(summary.mean_k, entry.k as f64);
        assert_eq!(summary.rmse_quantiles.median, entry.rmse);
    }

    #[test]
    fn kl_is_nonnegative_across_reps() {
        let mut cfg = tiny_config();
        cfg.reps = 40;
        let run = run_experiment(&cfg).unwrap();
        for r in &run.results {
            for e in &r.entries {
                assert!(e.kl >= -1e-8, "KL = {} in rep {}", e.kl, r.rep);
            }
        }
    }

    #[test]
    fn quantiles_are_ordered() {
        let q = Quantiles::from_values(&[3.0, 1.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(q.min, 1.0);
        assert_eq!(q.median, 3.0);
        assert_eq!(q.max, 5.0);
        assert!(q.q1 <= q.median && q.median <= q.q3);
    }
}
