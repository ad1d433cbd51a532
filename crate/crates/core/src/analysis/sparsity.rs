//! Weighted-degree and concentration statistics of a nonnegative adjacency.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Degree and entry-distribution statistics of one adjacency matrix.
pub struct SparsityReport {
    /// Row sums (weighted degree per node).
    pub weighted_degrees: Vec<f64>,
    /// All entries, sorted ascending.
    entries_sorted: Vec<f64>,
    /// Gini coefficient of the entry distribution.
    pub gini: f64,
}

impl SparsityReport {
    /// Fraction of entries strictly above `tau`. Monotone nonincreasing
    /// in `tau`.
    pub fn fraction_above(&self, tau: f64) -> f64 {
        if self.entries_sorted.is_empty() {
            return 0.0;
        }
        let above = self
            .entries_sorted
            .iter()
            .rev()
            .take_while(|&&v| v > tau)
            .count();
        above as f64 / self.entries_sorted.len() as f64
    }
}

/// Compute degrees, the entry distribution, and its Gini coefficient.
/// Entries must be nonnegative.
pub fn sparsity_report(a: &Matrix) -> Result<SparsityReport> {
    if a.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain(
            "sparsity statistics need a nonnegative matrix".into(),
        ));
    }
    let degrees: Vec<f64> = (0..a.rows()).map(|r| a.row(r).iter().sum()).collect();
    let mut entries: Vec<f64> = a.data().to_vec();
    entries.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let gini = gini_sorted(&entries);
    Ok(SparsityReport {
        weighted_degrees: degrees,
        entries_sorted: entries,
        gini,
    })
}

/// Gini coefficient of a sorted-ascending nonnegative sample:
/// G = 2·Σ i·x_i / (n·Σ x) − (n+1)/n.
fn gini_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1) as f64 * v)
        .sum();
    let nf = n as f64;
    (2.0 * weighted / (nf * total) - (nf + 1.0) / nf).clamp(0.0, 1.0)
}

/// JSON-facing summary with bucketed degree histogram.
#[derive(Debug, Serialize)]
pub struct SparsitySummary {
    pub nodes: usize,
    pub tau: f64,
    pub fraction_above: f64,
    pub gini: f64,
    pub degree_histogram: Vec<HistogramBucket>,
}

#[derive(Debug, Serialize)]
pub struct HistogramBucket {
    pub upper: f64,
    pub count: usize,
}

impl SparsityReport {
    pub fn summarize(&self, tau: f64, buckets: usize) -> SparsitySummary {
        let lo = self
            .weighted_degrees
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        let hi = self
            .weighted_degrees
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let width = ((hi - lo) / buckets as f64).max(f64::MIN_POSITIVE);
        let mut histogram: Vec<HistogramBucket> = (1..=buckets)
            .map(|b| HistogramBucket {
                upper: lo + width * b as f64,
                count: 0,
            })
            .collect();
        for &d in &self.weighted_degrees {
            let idx = (((d - lo) / width) as usize).min(buckets - 1);
            histogram[idx].count += 1;
        }
        SparsitySummary {
            nodes: self.weighted_degrees.len(),
            tau,
            fraction_above: self.fraction_above(tau),
            gini: self.gini,
            degree_histogram: histogram,
        }
    }
}

/// Keep the `keep_frac` largest-magnitude entries of `m`; set the rest to
/// `fill`. Used to probe how much of a trained coefficient matrix carries
/// signal.
pub fn clamp_low_magnitude(m: &Matrix, keep_frac: f64, fill: f64) -> Matrix {
    let total = m.rows() * m.cols();
    let keep = ((total as f64) * keep_frac).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        m.data()[b]
            .abs()
            .partial_cmp(&m.data()[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut out = Matrix::filled(m.rows(), m.cols(), fill);
    for &idx in order.iter().take(keep) {
        out.data_mut()[idx] = m.data()[idx];
    }
    out
}
