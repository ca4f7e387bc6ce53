//! Paired two-sided Wilcoxon signed-rank test, normal approximation with
//! tie and continuity corrections.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Two-sided p-value for paired samples `a` and `b`. Zero differences are
/// dropped; if all differences are zero the test is degenerate and `p = 1`.
/// At least 10 nonzero differences are required for the normal approximation.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(1.0);
    }
    if diffs.len() < 10 {
        return Err(Error::InsufficientPairs {
            nonzero: diffs.len(),
        });
    }

    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));

    // average ranks within tie groups, collecting tie sizes for the
    // variance correction
    let mut ranks = vec![0.0; n];
    let mut tie_correction = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg_rank;
        }
        let t = (end - start) as f64;
        tie_correction += t * t * t - t;
        start = end;
    }

    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction / 48.0;
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let dev = w_plus - mean;
    // continuity correction: shrink the deviation by half a step
    let z = if dev.abs() <= 0.5 {
        0.0
    } else {
        (dev - 0.5 * dev.signum()) / variance.sqrt()
    };
    // two-sided: p = 2 Phi(-|z|) = erfc(|z|/sqrt(2))
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn too_few_nonzero_differences() {
        let a = vec![1.0; 12];
        let mut b = a.clone();
        b[0] += 1.0;
        b[5] -= 2.0;
        assert!(matches!(
            wilcoxon_signed_rank(&a, &b),
            Err(Error::InsufficientPairs { nonzero: 2 })
        ));
    }

    #[test]
    fn uniformly_shifted_sample_is_significant() {
        // 50 positive differences: W+ = 1275, z = 636.5/sqrt(10731.25)
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 100.0).collect();
        let p = wilcoxon_signed_rank(&b, &a).unwrap();
        assert!(p < 1e-6, "p = {p}");
        // hand-computed z for the all-positive case with tied |d|
        let var = 50.0 * 51.0 * 101.0 / 24.0 - (50.0f64.powi(3) - 50.0) / 48.0;
        let z = (1275.0 - 637.5 - 0.5) / var.sqrt();
        let expected = erfc(z / std::f64::consts::SQRT_2);
        assert!((p - expected).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_differences_are_insignificant() {
        let a: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let b: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { v + 1.0 } else { v - 1.0 })
            .collect();
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(p > 0.9, "p = {p}");
    }
}
