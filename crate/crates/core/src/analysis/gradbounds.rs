//! Adjacency gradient bounds: softmax normalization keeps every partial
//! inside ±1/4, while plain linear normalization (the kernelized route)
//! blows up as 1/(4·s) when the pre-activation scores get small.
//!
//! Both adjacencies share the same quotient form A_ij = f(s_ij)/Σ_k f(s_ik)
//! with ∂A_ij/∂s_ik = f'(s_ik)/f(s_ik) · (1_{j=k}·A_ij − A_ij·A_ik); the two
//! instantiations below are f = exp and f = identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::rng::Rng;

/// ∂A_ij/∂s_ik for the softmax adjacency A = softmax_rows(E1·E2).
/// With f = exp the prefactor f'/f is 1, leaving A_ij(1_{j=k} − A_ik).
pub fn softmax_adjacency_grad(
    e1: &Matrix,
    e2: &Matrix,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let n = e2.cols();
    if i >= e1.rows() || j >= n || k >= n {
        return Err(Error::Domain(format!(
            "index out of range: i={i}, j={j}, k={k} for {}x{n}",
            e1.rows()
        )));
    }
    let s_row = score_row(e1, e2, i)?;
    Ok(softmax_row_partial(&s_row, j, k))
}

/// Same partial, computed from one row of raw scores.
pub fn softmax_row_partial(s_row: &[f64], j: usize, k: usize) -> f64 {
    let a = softmax(s_row);
    let indicator = if j == k { 1.0 } else { 0.0 };
    a[j] * (indicator - a[k])
}

/// The divergence bound 1/(4·s_ik) for the linear-normalization adjacency.
/// Exact zero is the anomaly itself.
pub fn kernel_adjacency_grad_bound(s_ik: f64) -> Result<f64> {
    if s_ik <= 0.0 {
        return Err(Error::Singular(format!(
            "kernel gradient bound diverges: s_ik = {s_ik} must be positive"
        )));
    }
    Ok(1.0 / (4.0 * s_ik))
}

/// Exact ∂A_ij/∂s_ik for A_ij = s_ij / Σ_k s_ik over a positive score row.
pub fn linear_norm_partial(s_row: &[f64], j: usize, k: usize) -> Result<f64> {
    if s_row.iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(
            "linear normalization needs strictly positive scores".into(),
        ));
    }
    let total: f64 = s_row.iter().sum();
    let a_j = s_row[j] / total;
    let indicator = if j == k { 1.0 } else { 0.0 };
    Ok((indicator - a_j) / total)
}

fn score_row(e1: &Matrix, e2: &Matrix, i: usize) -> Result<Vec<f64>> {
    if e1.cols() != e2.rows() {
        return Err(Error::Shape {
            op: "score_row",
            left_rows: e1.rows(),
            left_cols: e1.cols(),
            right_rows: e2.rows(),
            right_cols: e2.cols(),
        });
    }
    let n = e2.cols();
    let mut row = vec![0.0; n];
    for (j, slot) in row.iter_mut().enumerate() {
        let mut acc = 0.0;
        for c in 0..e1.cols() {
            acc += e1.get(i, c) * e2.get(c, j);
        }
        *slot = acc;
    }
    Ok(row)
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let mx = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = row.iter().map(|&v| (v - mx).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Largest |partial| across all (j, k) for one softmax score row.
pub fn max_abs_softmax_partial(s_row: &[f64]) -> f64 {
    let a = softmax(s_row);
    let mut worst = 0.0f64;
    for j in 0..a.len() {
        for k in 0..a.len() {
            let indicator = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((a[j] * (indicator - a[k])).abs());
        }
    }
    worst
}

/// Largest |partial| across all (j, k) for one positive score row under
/// linear normalization.
pub fn max_abs_linear_partial(s_row: &[f64]) -> Result<f64> {
    let total: f64 = s_row.iter().sum();
    if s_row.iter().any(|&v| v <= 0.0) || total <= 0.0 {
        return Err(Error::Domain(
            "linear normalization needs strictly positive scores".into(),
        ));
    }
    let mut worst = 0.0f64;
    for j in 0..s_row.len() {
        let a_j = s_row[j] / total;
        // k = j maximizes |1 − a_j|/total; k ≠ j gives a_j/total.
        worst = worst.max(((1.0 - a_j) / total).abs());
        worst = worst.max((a_j / total).abs());
    }
    Ok(worst)
}

#[derive(Debug, Serialize)]
pub struct BoundScanReport {
    pub draws: usize,
    pub bound: f64,
    pub bound_max: f64,
    pub violations: usize,
}

/// Scan random (E1, E2) pairs (N up to `max_n`, inner dimension `c`) and
/// record the largest |softmax partial| over every (i, j, k) of every draw,
/// plus how many draws exceeded 1/4.
pub fn softmax_bound_scan(draws: usize, max_n: usize, c: usize, seed: u64) -> BoundScanReport {
    let mut rng = Rng::seed_from_u64(seed);
    let mut bound_max = 0.0f64;
    let mut violations = 0;
    const TOL: f64 = 1e-12;
    for _ in 0..draws {
        let n = 2 + rng.usize_below(max_n.saturating_sub(1).max(1));
        let scale = 10.0f64.powf(rng.uniform(-2.0, 2.0));
        let e1 = random_matrix(&mut rng, n, c, scale);
        let e2 = random_matrix(&mut rng, c, n, 1.0);
        let mut worst = 0.0f64;
        for i in 0..n {
            let s_row = score_row(&e1, &e2, i).expect("shapes agree");
            worst = worst.max(max_abs_softmax_partial(&s_row));
        }
        bound_max = bound_max.max(worst);
        if worst > 0.25 + TOL {
            violations += 1;
        }
    }
    BoundScanReport {
        draws,
        bound: 0.25,
        bound_max,
        violations,
    }
}

#[derive(Debug, Serialize)]
pub struct AnomalyScanReport {
    pub draws: usize,
    /// Largest |partial| of the linear-normalization adjacency.
    pub kernel_max: f64,
    /// Smallest score that produced the kernel maximum.
    pub min_score_seen: f64,
    /// Largest |partial| of the softmax adjacency on the same draws.
    pub softmax_max: f64,
}

/// Draw positive score rows across many magnitudes (down to 1e-6) and
/// compare the exact partials of both normalizations on identical rows.
pub fn kernel_anomaly_scan(draws: usize, seed: u64) -> AnomalyScanReport {
    let mut rng = Rng::seed_from_u64(seed);
    let mut kernel_max = 0.0f64;
    let mut softmax_max = 0.0f64;
    let mut min_score = f64::INFINITY;
    for _ in 0..draws {
        let n = 2 + rng.usize_below(15);
        let scale = 10.0f64.powf(rng.uniform(-6.0, 0.0));
        let row: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0) * scale).collect();
        min_score = min_score.min(row.iter().fold(f64::INFINITY, |m, &v| m.min(v)));
        kernel_max = kernel_max.max(max_abs_linear_partial(&row).expect("positive rows"));
        softmax_max = softmax_max.max(max_abs_softmax_partial(&row));
    }
    AnomalyScanReport {
        draws,
        kernel_max,
        min_score_seen: min_score,
        softmax_max,
    }
}

fn random_matrix(rng: &mut Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::new(
        r,
        c,
        (0..r * c).map(|_| rng.uniform(-1.0, 1.0) * scale).collect(),
    )
    .expect("shape")
}
