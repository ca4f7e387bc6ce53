//! Shared helpers for the integration suites: reproducible random problem
//! instances with well-conditioned designs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regsel::{Dataset, RestrictionSet};

pub struct Instance {
    pub data: Dataset,
    pub rest: RestrictionSet,
}

fn well_conditioned(x: &DMatrix<f64>) -> bool {
    // the oracle comparisons run two different solve paths at 1e-10
    // tolerances, so keep kappa(X)^2 * eps comfortably below that
    let sv = x.singular_values();
    sv.min() > sv.max() * 3e-3
}

/// A random instance with `n` rows, `p` columns, and `m` random restriction
/// rows (`r = 0` on even seeds, random otherwise). Designs and restriction
/// matrices are redrawn until well conditioned.
pub fn random_instance(n: usize, p: usize, m: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = loop {
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        if well_conditioned(&x) {
            break x;
        }
    };
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let rest = loop {
        let rmat = DMatrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        if m > 0 && !well_conditioned(&rmat.transpose()) {
            continue;
        }
        let rvec = if seed.is_multiple_of(2) {
            DVector::zeros(m)
        } else {
            DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
        };
        if let Ok(rest) = RestrictionSet::new(rmat, rvec) {
            break rest;
        }
    };
    Instance {
        data: Dataset::new(x, y).unwrap(),
        rest,
    }
}

/// Draws (n, p, m) inside the given ranges and builds the instance.
pub fn random_dims_instance(
    p_max: usize,
    n_max: usize,
    seed: u64,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let p = rng.random_range(1..=p_max);
    let n = rng.random_range((p + 2).max(3)..=n_max.max(p + 3));
    let m = rng.random_range(0..=p);
    random_instance(n, p, m, seed)
}
