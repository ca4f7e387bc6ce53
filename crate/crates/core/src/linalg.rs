//! Small shared linear-algebra helpers.

use nalgebra::DMatrix;

/// Numerical rank from singular values with the standard relative threshold
/// `max(nrows, ncols) * eps * sigma_max`.
pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the null space of `m`, returned as the rows of a
/// `(p - k) x p` matrix. `m` must be `k x p` with full row rank, `k <= p`.
pub(crate) fn null_space_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, p) = m.shape();
    debug_assert!(k <= p);
    if k == 0 {
        return DMatrix::identity(p, p);
    }
    // Pad with zero rows so the SVD is square and carries the full
    // right-singular basis; the trailing p - k rows of V' span null(m).
    let mut padded = DMatrix::zeros(p, p);
    padded.view_mut((0, 0), (k, p)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t was requested");
    vt.rows(k, p - k).into_owned()
}

/// Forces exact symmetry on a nearly-symmetric matrix before factorization.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
