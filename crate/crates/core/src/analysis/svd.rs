//! Singular values via one-sided Jacobi rotations.
//!
//! The one-sided method orthogonalizes the columns of a working copy; the
//! singular values are the column norms at convergence. Unlike the Gram
//! matrix route it resolves tiny singular values to near machine precision,
//! which the rank gate needs (threshold 1e-10 relative to the largest
//! singular value).

use crate::numkernel::Matrix;

const MAX_SWEEPS: usize = 60;
const ORTH_TOL: f64 = 1e-14;

/// Singular values of `m`, sorted descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    // Work on the taller orientation so columns are long and few.
    let work = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let rows = work.rows();
    let cols = work.cols();
    // Column-major copy for cheap column access.
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|c| (0..rows).map(|r| work.get(r, c)).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|v| v * v).sum();
                let beta: f64 = a[q].iter().map(|v| v * v).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let vp = a[p][r];
                    let vq = a[q][r];
                    a[p][r] = c * vp - s * vq;
                    a[q][r] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigmas: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sigmas
}

/// Count of singular values at or above `rel_tol` times the largest.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> usize {
    let sigmas = singular_values(m);
    let largest = sigmas.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return 0;
    }
    sigmas.iter().filter(|&&s| s >= rel_tol * largest).count()
}
