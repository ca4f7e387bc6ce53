//! Candidate families and per-criterion argmin selection.

use serde::Serialize;

use crate::criteria::{
    aicc, bic, cp, fpe, gcv, kfold_cv, press, raicc, rcp, sp, Criterion, CriterionValue,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{fit_restricted, fit_unrestricted, RestrictedFit};
use crate::restriction::{variable_selection_restriction, RestrictionRow, RestrictionSet};

/// Upper bound on the powerset base size (2^20 candidates).
pub const MAX_POWERSET_ROWS: usize = 20;

/// A labeled restriction set inside a candidate family.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub restriction: RestrictionSet,
}

/// An ordered, labeled list of candidate restriction sets over a shared `p`.
#[derive(Debug, Clone)]
pub struct CandidateFamily {
    candidates: Vec<Candidate>,
    p: usize,
}

impl CandidateFamily {
    /// Validates that the list is nonempty, shares one `p`, and has unique
    /// labels.
    pub fn new(candidates: Vec<(String, RestrictionSet)>) -> Result<Self> {
        let p = match candidates.first() {
            Some((_, rest)) => rest.p(),
            None => {
                return Err(Error::Dimension(
                    "candidate family must contain at least one model".into(),
                ))
            }
        };
        let mut labels = std::collections::HashSet::new();
        for (label, rest) in &candidates {
            if rest.p() != p {
                return Err(Error::Dimension(format!(
                    "candidate `{label}` is over {} coefficients, expected {p}",
                    rest.p()
                )));
            }
            if !labels.insert(label.clone()) {
                return Err(Error::Dimension(format!(
                    "duplicate candidate label `{label}`"
                )));
            }
        }
        Ok(Self {
            candidates: candidates
                .into_iter()
                .map(|(label, restriction)| Candidate { label, restriction })
                .collect(),
            p,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }
}

/// Nested variable-selection candidates `k = 0..=p`, labeled `k=<j>`.
pub fn nested_subsets(p: usize) -> Result<CandidateFamily> {
    let mut out = Vec::with_capacity(p + 1);
    for k in 0..=p {
        out.push((format!("k={k}"), variable_selection_restriction(k, p)?));
    }
    CandidateFamily::new(out)
}

fn subset_label(mask: u32, base_len: usize) -> String {
    if mask == 0 {
        return "none".to_string();
    }
    let mut parts = Vec::new();
    for j in 0..base_len {
        if mask & (1 << j) != 0 {
            parts.push(format!("r{}", j + 1));
        }
    }
    parts.join("+")
}

/// Every subset of the base rows as a candidate. Rank-deficient subsets are
/// dropped; their labels are returned alongside the family.
pub fn restriction_powerset(
    base: &[RestrictionRow],
    p: usize,
) -> Result<(CandidateFamily, Vec<String>)> {
    if base.len() > MAX_POWERSET_ROWS {
        return Err(Error::PowersetTooLarge {
            rows: base.len(),
            max: MAX_POWERSET_ROWS,
        });
    }
    let mut candidates = Vec::with_capacity(1 << base.len());
    let mut dropped = Vec::new();
    for mask in 0..(1u32 << base.len()) {
        let rows: Vec<RestrictionRow> = (0..base.len())
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| base[j].clone())
            .collect();
        let label = subset_label(mask, base.len());
        match RestrictionSet::from_rows(&rows, p) {
            Ok(rest) => candidates.push((label, rest)),
            Err(Error::RestrictionRank { .. }) => dropped.push(label),
            Err(e) => return Err(e),
        }
    }
    Ok((CandidateFamily::new(candidates)?, dropped))
}

/// Candidates that exclude the base restrictions in a nested fashion:
/// candidate `j` drops the first `j` rows, so `m` runs from `|base|` down
/// to 0. Labels are `m=<count>`.
pub fn nested_restriction_exclusion(
    base: &[RestrictionRow],
    p: usize,
) -> Result<CandidateFamily> {
    // the full stack must be independent; suffixes inherit independence
    RestrictionSet::from_rows(base, p)?;
    let mut out = Vec::with_capacity(base.len() + 1);
    for j in 0..=base.len() {
        let rest = RestrictionSet::from_rows(&base[j..], p)?;
        out.push((format!("m={}", base.len() - j), rest));
    }
    CandidateFamily::new(out)
}

/// The winning candidate under one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct ChosenModel {
    pub criterion: Criterion,
    pub index: usize,
    pub label: String,
    pub m: usize,
    pub k: usize,
}

/// Scores and argmin picks for every requested criterion.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub criteria: Vec<Criterion>,
    /// `scores[c][j]`: value of `criteria[c]` at candidate `j`.
    pub scores: Vec<Vec<CriterionValue>>,
    pub chosen: Vec<ChosenModel>,
}

impl SelectionResult {
    pub fn chosen_for(&self, criterion: Criterion) -> Option<&ChosenModel> {
        self.chosen.iter().find(|c| c.criterion == criterion)
    }
}

/// Fits every candidate and selects the argmin per criterion. The seed only
/// feeds the K-fold CV split (one shared split across candidates).
pub fn select(
    data: &Dataset,
    family: &CandidateFamily,
    criteria: &[Criterion],
    seed: u64,
) -> Result<SelectionResult> {
    let fits = family
        .candidates()
        .iter()
        .map(|c| fit_restricted(data, &c.restriction))
        .collect::<Result<Vec<_>>>()?;
    select_with_fits(data, family, &fits, criteria, seed)
}

/// Selection over precomputed candidate fits; the simulation engine reuses
/// the fits for its evaluation metrics.
pub fn select_with_fits(
    data: &Dataset,
    family: &CandidateFamily,
    fits: &[RestrictedFit],
    criteria: &[Criterion],
    seed: u64,
) -> Result<SelectionResult> {
    assert_eq!(fits.len(), family.len());
    let needs_full = criteria
        .iter()
        .any(|c| matches!(c, Criterion::Cp | Criterion::Rcp));
    let rss_full = if needs_full {
        Some(fit_unrestricted(data)?.rss)
    } else {
        None
    };

    let mut scores = Vec::with_capacity(criteria.len());
    let mut chosen = Vec::with_capacity(criteria.len());
    for &criterion in criteria {
        let mut values = Vec::with_capacity(family.len());
        for (candidate, fit) in family.candidates().iter().zip(fits) {
            values.push(score_one(
                criterion, data, candidate, fit, rss_full, seed,
            )?);
        }
        let index = argmin(criterion, &values, fits)?;
        chosen.push(ChosenModel {
            criterion,
            index,
            label: family.candidates()[index].label.clone(),
            m: fits[index].m,
            k: fits[index].k(),
        });
        scores.push(values);
    }
    Ok(SelectionResult {
        criteria: criteria.to_vec(),
        scores,
        chosen,
    })
}

fn score_one(
    criterion: Criterion,
    data: &Dataset,
    candidate: &Candidate,
    fit: &RestrictedFit,
    rss_full: Option<f64>,
    seed: u64,
) -> Result<CriterionValue> {
    let dims = fit.dims();
    let value = match criterion {
        Criterion::Aicc => aicc(fit.rss, dims),
        Criterion::Raicc => raicc(fit.rss, dims),
        Criterion::Cp => cp(fit.rss, rss_full.expect("full fit computed"), dims)?,
        Criterion::Fpe => fpe(fit.rss, dims),
        Criterion::Rcp => rcp(fit.rss, rss_full.expect("full fit computed"), dims)?,
        Criterion::Sp => sp(fit.rss, dims),
        Criterion::Bic => bic(fit.rss, dims),
        Criterion::Gcv => gcv(fit.rss, dims),
        // per-candidate leverage or fold degeneracies exclude the candidate
        // instead of aborting the whole selection
        Criterion::Loocv => match press(data, &candidate.restriction) {
            Ok(v) => v,
            Err(Error::LeverageSingularity { .. }) => CriterionValue {
                name: Criterion::Loocv,
                value: f64::INFINITY,
                dims,
                saturated: false,
            },
            Err(e) => return Err(e),
        },
        Criterion::TenFold => match kfold_cv(data, &candidate.restriction, 10, seed) {
            Ok(v) => v,
            Err(Error::FoldDegeneracy { .. }) => CriterionValue {
                name: Criterion::TenFold,
                value: f64::INFINITY,
                dims,
                saturated: false,
            },
            Err(e) => return Err(e),
        },
    };
    Ok(value)
}

/// Argmin with ties broken toward more restrictions (sparser model), then
/// toward the earlier candidate. `+inf` sentinels are never chosen.
fn argmin(
    criterion: Criterion,
    values: &[CriterionValue],
    fits: &[RestrictedFit],
) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (j, v) in values.iter().enumerate() {
        if v.value.is_nan() || v.value == f64::INFINITY {
            continue;
        }
        best = match best {
            None => Some(j),
            Some(b) => {
                let better = v.value < values[b].value
                    || (v.value == values[b].value && fits[j].m > fits[b].m);
                if better {
                    Some(j)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.ok_or_else(|| Error::NoFeasibleModel {
        criterion: criterion.name().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::RestrictionExpr;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gr_ex1_rows(p: usize) -> Vec<RestrictionRow> {
        [
            "b1=b4", "b1=2*b2", "b1=b2", "b2=b3", "b4=b5", "b5=b6",
        ]
        .iter()
        .map(|s| RestrictionExpr::parse(s).unwrap().to_row(p).unwrap())
        .collect()
    }

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn nested_family_shape() {
        let family = nested_subsets(2).unwrap();
        assert_eq!(family.len(), 3);
        let ms: Vec<usize> = family
            .candidates()
            .iter()
            .map(|c| c.restriction.m())
            .collect();
        assert_eq!(ms, vec![2, 1, 0]);

        let family = nested_subsets(5).unwrap();
        let labels: Vec<&str> = family
            .candidates()
            .iter()
            .map(|c| c.label.as_str())
            .collect();
        assert_eq!(labels, vec!["k=0", "k=1", "k=2", "k=3", "k=4", "k=5"]);
    }

    #[test]
    fn nested_rss_is_nonincreasing_in_k() {
        let data = random_dataset(20, 5, 42);
        let family = nested_subsets(5).unwrap();
        let mut last = f64::INFINITY;
        for c in family.candidates() {
            let fit = fit_restricted(&data, &c.restriction).unwrap();
            assert!(fit.rss <= last + 1e-9);
            last = fit.rss;
        }
    }

    #[test]
    fn powerset_of_gr_ex1_has_64_candidates() {
        let (family, dropped) = restriction_powerset(&gr_ex1_rows(6), 6).unwrap();
        assert_eq!(family.len(), 64);
        assert!(dropped.is_empty());
        assert_eq!(family.candidates()[0].label, "none");
        assert_eq!(family.candidates()[0].restriction.m(), 0);
        assert_eq!(family.candidates()[63].restriction.m(), 6);
    }

    #[test]
    fn powerset_sizes_for_two_rows() {
        let rows = vec![
            RestrictionExpr::parse("b1=b2").unwrap().to_row(3).unwrap(),
            RestrictionExpr::parse("b3=0").unwrap().to_row(3).unwrap(),
        ];
        let (family, dropped) = restriction_powerset(&rows, 3).unwrap();
        assert_eq!(family.len(), 4);
        assert!(dropped.is_empty());
        let mut ms: Vec<usize> = family
            .candidates()
            .iter()
            .map(|c| c.restriction.m())
            .collect();
        ms.sort_unstable();
        assert_eq!(ms, vec![0, 1, 1, 2]);
    }

    #[test]
    fn powerset_drops_dependent_subsets() {
        let rows = vec![
            RestrictionExpr::parse("b1=b2").unwrap().to_row(2).unwrap(),
            RestrictionExpr::parse("b2=b1").unwrap().to_row(2).unwrap(),
        ];
        let (family, dropped) = restriction_powerset(&rows, 2).unwrap();
        assert_eq!(family.len(), 3);
        assert_eq!(dropped, vec!["r1+r2".to_string()]);
    }

    #[test]
    fn powerset_guard() {
        let row = RestrictionRow {
            coeffs: vec![1.0, 0.0],
            target: 0.0,
        };
        let base = vec![row; 21];
        assert!(matches!(
            restriction_powerset(&base, 2),
            Err(Error::PowersetTooLarge { rows: 21, max: 20 })
        ));
    }

    #[test]
    fn nested_exclusion_counts_down() {
        let rows = gr_ex1_rows(6)[..3].to_vec();
        let family = nested_restriction_exclusion(&rows, 6).unwrap();
        assert_eq!(family.len(), 4);
        let ms: Vec<usize> = family
            .candidates()
            .iter()
            .map(|c| c.restriction.m())
            .collect();
        assert_eq!(ms, vec![3, 2, 1, 0]);
        assert_eq!(family.candidates()[0].label, "m=3");
    }

    #[test]
    fn single_candidate_always_wins() {
        let data = random_dataset(12, 3, 5);
        let family = CandidateFamily::new(vec![(
            "only".to_string(),
            variable_selection_restriction(2, 3).unwrap(),
        )])
        .unwrap();
        let sel = select(&data, &family, &Criterion::ALL, 7).unwrap();
        for c in &sel.chosen {
            assert_eq!(c.index, 0);
        }
    }

    #[test]
    fn ties_prefer_earlier_of_identical_candidates() {
        let data = random_dataset(14, 4, 6);
        let rest = variable_selection_restriction(2, 4).unwrap();
        let family = CandidateFamily::new(vec![
            ("a".to_string(), rest.clone()),
            ("b".to_string(), rest),
        ])
        .unwrap();
        let sel = select(&data, &family, &[Criterion::Aicc, Criterion::Sp], 0).unwrap();
        for c in &sel.chosen {
            assert_eq!(c.index, 0, "identical candidates must tie-break to the first");
        }
    }

    #[test]
    fn ties_prefer_more_restrictions() {
        let mk_fit = |m: usize| RestrictedFit {
            beta_hat: DVector::zeros(4),
            sigma_hat_sq: 0.5,
            rss: 5.0,
            n: 10,
            p: 4,
            m,
        };
        let fits = [mk_fit(0), mk_fit(2), mk_fit(1)];
        let values: Vec<CriterionValue> = fits
            .iter()
            .map(|f| CriterionValue {
                name: Criterion::Sp,
                value: 1.0,
                dims: f.dims(),
                saturated: false,
            })
            .collect();
        // equal scores: the candidate with the most restrictions wins
        assert_eq!(argmin(Criterion::Sp, &values, &fits).unwrap(), 1);
    }

    #[test]
    fn no_feasible_model_errors() {
        // n=5, p=4: AICc denominator n-p+m-2 <= 0 for m < 1
        let data = random_dataset(5, 4, 9);
        let family = CandidateFamily::new(vec![(
            "full".to_string(),
            RestrictionSet::unrestricted(4),
        )])
        .unwrap();
        let err = select(&data, &family, &[Criterion::Aicc], 0).unwrap_err();
        assert!(matches!(err, Error::NoFeasibleModel { .. }));
    }

    #[test]
    fn selection_is_invariant_to_label_permutation() {
        let data = random_dataset(25, 5, 10);
        let family = nested_subsets(5).unwrap();
        let criteria = [Criterion::Aicc, Criterion::Raicc, Criterion::Sp];
        let sel = select(&data, &family, &criteria, 3).unwrap();

        let mut reversed: Vec<(String, RestrictionSet)> = family
            .candidates()
            .iter()
            .map(|c| (c.label.clone(), c.restriction.clone()))
            .collect();
        reversed.reverse();
        let rev_family = CandidateFamily::new(reversed).unwrap();
        let rev = select(&data, &rev_family, &criteria, 3).unwrap();
        for (a, b) in sel.chosen.iter().zip(&rev.chosen) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.m, b.m);
        }
    }

    #[test]
    fn selection_is_invariant_to_response_scaling() {
        let data = random_dataset(18, 4, 11);
        let family = nested_subsets(4).unwrap();
        let criteria = Criterion::ALL;
        let sel = select(&data, &family, &criteria, 5).unwrap();
        for c in [0.5, 3.7, 1024.0] {
            let scaled = select(&data.scale_y(c), &family, &criteria, 5).unwrap();
            for (a, b) in sel.chosen.iter().zip(&scaled.chosen) {
                assert_eq!(a.index, b.index, "criterion {} changed under y*{c}", a.criterion);
            }
        }
    }
}
