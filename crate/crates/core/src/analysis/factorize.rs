//! Rank-C factorization M = λ·K·μ and its conjugation non-uniqueness.
//!
//! λ holds linearly independent columns of M (pivot columns from Gaussian
//! elimination with partial pivoting), μ holds independent rows, and the
//! C x C core K is solved by least squares so that λ·K·μ reproduces M.
//! Conjugating by any invertible D gives (λD, D⁻¹KD, D⁻¹μ): a different K,
//! the same reconstruction.

use crate::analysis::svd;
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Relative threshold on singular values for rank detection and pivot
/// acceptance.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Reconstruction must stay within this times max(1, ‖M‖_max).
pub const RESIDUAL_BOUND: f64 = 1e-8;

/// A certified factorization M ≈ lambda · k · mu.
#[derive(Debug)]
pub struct RankFactorization {
    pub lambda: Matrix,
    pub k: Matrix,
    pub mu: Matrix,
}

impl RankFactorization {
    pub fn reconstruct(&self) -> Result<Matrix> {
        self.lambda.matmul(&self.k)?.matmul(&self.mu)
    }

    /// Max-norm reconstruction error against `m`.
    pub fn residual(&self, m: &Matrix) -> Result<f64> {
        let rec = self.reconstruct()?;
        let diff = rec.sub(m)?;
        Ok(diff.max_abs())
    }
}

/// Factor `m` through a rank-`c` core. Errors if the numerical rank of `m`
/// exceeds `c` (singular values below `RANK_REL_TOL` times the largest do
/// not count).
pub fn rank_factorize(m: &Matrix, c: usize) -> Result<RankFactorization> {
    let sigmas = svd::singular_values(m);
    let sigma_max = sigmas.first().copied().unwrap_or(0.0);
    let detected = if sigma_max == 0.0 {
        0
    } else {
        sigmas.iter().filter(|&&s| s >= RANK_REL_TOL * sigma_max).count()
    };
    if detected > c {
        return Err(Error::Rank {
            detected,
            requested: c,
        });
    }
    let pivot_tol = RANK_REL_TOL * sigma_max;

    // Basis extraction per the elimination construction.
    let col_pivots = pivot_columns(m, pivot_tol);
    let row_pivots = pivot_columns(&m.transpose(), pivot_tol);
    let r = detected.min(col_pivots.len()).min(row_pivots.len());

    let (n_rows, n_cols) = m.shape();
    let mut lambda = Matrix::zeros(n_rows, c);
    for (slot, &col) in col_pivots.iter().take(r).enumerate() {
        for row in 0..n_rows {
            lambda.set(row, slot, m.get(row, col));
        }
    }
    let mut mu = Matrix::zeros(c, n_cols);
    for (slot, &row) in row_pivots.iter().take(r).enumerate() {
        for col in 0..n_cols {
            mu.set(slot, col, m.get(row, col));
        }
    }

    // Least squares for the core, restricted to the r live slots so the
    // Gram matrices stay invertible: K_r = (λᵀλ)⁻¹ λᵀ M μᵀ (μμᵀ)⁻¹.
    let mut k = Matrix::zeros(c, c);
    if r > 0 {
        let lam_r = lambda.slice_cols(0, r);
        let mu_r = mu.slice_rows(0, r);
        let ltl = lam_r.transpose().matmul(&lam_r)?;
        let mmt = mu_r.matmul(&mu_r.transpose())?;
        let rhs = lam_r.transpose().matmul(m)?.matmul(&mu_r.transpose())?;
        let k_r = invert(&ltl)?.matmul(&rhs)?.matmul(&invert(&mmt)?)?;
        for i in 0..r {
            for j in 0..r {
                k.set(i, j, k_r.get(i, j));
            }
        }
    }

    let fact = RankFactorization { lambda, k, mu };
    let residual = fact.residual(m)?;
    let bound = RESIDUAL_BOUND * m.max_abs().max(1.0);
    if residual > bound {
        return Err(Error::Evaluation(format!(
            "factorization residual {residual} exceeds bound {bound}"
        )));
    }
    Ok(fact)
}

/// Conjugate a factorization by an invertible D: (λD, D⁻¹KD, D⁻¹μ).
/// Reconstruction is unchanged; K̃ differs from K whenever D does not
/// commute with K.
pub fn conjugate_factorization(
    f: &RankFactorization,
    d: &Matrix,
) -> Result<RankFactorization> {
    if d.rows() != d.cols() || d.rows() != f.k.rows() {
        return Err(Error::Shape {
            op: "conjugate_factorization",
            left_rows: f.k.rows(),
            left_cols: f.k.cols(),
            right_rows: d.rows(),
            right_cols: d.cols(),
        });
    }
    let sigmas = svd::singular_values(d);
    let (hi, lo) = (
        sigmas.first().copied().unwrap_or(0.0),
        sigmas.last().copied().unwrap_or(0.0),
    );
    if lo == 0.0 || hi / lo >= 1e8 {
        return Err(Error::Singular(format!(
            "conjugation matrix is numerically singular (condition {:.3e})",
            if lo == 0.0 { f64::INFINITY } else { hi / lo }
        )));
    }
    let d_inv = invert(d)?;
    Ok(RankFactorization {
        lambda: f.lambda.matmul(d)?,
        k: d_inv.matmul(&f.k)?.matmul(d)?,
        mu: d_inv.matmul(&f.mu)?,
    })
}

/// Pivot column indices found by Gaussian elimination with partial pivoting.
fn pivot_columns(m: &Matrix, tol: f64) -> Vec<usize> {
    let (rows, cols) = m.shape();
    let mut work = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        // Partial pivoting: largest entry in this column at or below `row`.
        let mut best = row;
        for r in row + 1..rows {
            if work.get(r, col).abs() > work.get(best, col).abs() {
                best = r;
            }
        }
        if work.get(best, col).abs() <= tol {
            continue;
        }
        if best != row {
            for c in 0..cols {
                let tmp = work.get(row, c);
                work.set(row, c, work.get(best, c));
                work.set(best, c, tmp);
            }
        }
        let pivot = work.get(row, col);
        for r in row + 1..rows {
            let factor = work.get(r, col) / pivot;
            if factor != 0.0 {
                for c in col..cols {
                    work.set(r, c, work.get(r, c) - factor * work.get(row, c));
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Gauss-Jordan inverse with partial pivoting, for the small square systems
/// in this module.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    if m.rows() != m.cols() {
        return Err(Error::Shape {
            op: "invert",
            left_rows: m.rows(),
            left_cols: m.cols(),
            right_rows: m.rows(),
            right_cols: m.rows(),
        });
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = Matrix::eye(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut best = col;
        for r in col + 1..n {
            if a.get(r, col).abs() > a.get(best, col).abs() {
                best = r;
            }
        }
        let pivot = a.get(best, col);
        if pivot.abs() <= 1e-14 * scale {
            return Err(Error::Singular(format!(
                "pivot {pivot:.3e} at column {col} is below tolerance"
            )));
        }
        if best != col {
            for c in 0..n {
                let (x, y) = (a.get(col, c), a.get(best, c));
                a.set(col, c, y);
                a.set(best, c, x);
                let (x, y) = (inv.get(col, c), inv.get(best, c));
                inv.set(col, c, y);
                inv.set(best, c, x);
            }
        }
        let pivot = a.get(col, col);
        for c in 0..n {
            a.set(col, c, a.get(col, c) / pivot);
            inv.set(col, c, inv.get(col, c) / pivot);
        }
        for r in 0..n {
            if r != col {
                let factor = a.get(r, col);
                if factor != 0.0 {
                    for c in 0..n {
                        a.set(r, c, a.get(r, c) - factor * a.get(col, c));
                        inv.set(r, c, inv.get(r, c) - factor * inv.get(col, c));
                    }
                }
            }
        }
    }
    Ok(inv)
}
