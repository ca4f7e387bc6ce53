//! Fixture generation shared by the benchmark targets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regsel::{Dataset, RestrictionRow, RestrictionSet};

/// A reproducible dense regression problem with `m` random contrast rows.
pub fn fixture(n: usize, p: usize, m: usize, seed: u64) -> (Dataset, RestrictionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p, |j, _| if j % 3 == 0 { 1.0 } else { 0.2 });
    let mut y = &x * beta;
    for v in y.iter_mut() {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    let rows: Vec<RestrictionRow> = (0..m)
        .map(|i| {
            let mut coeffs = vec![0.0; p];
            coeffs[i] = 1.0;
            coeffs[(i + 1) % p] = -1.0;
            RestrictionRow {
                coeffs,
                target: 0.0,
            }
        })
        .collect();
    let rest = RestrictionSet::from_rows(&rows, p).expect("independent contrast rows");
    (Dataset::new(x, y).expect("finite fixture"), rest)
}
