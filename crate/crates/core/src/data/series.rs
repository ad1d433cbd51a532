//! Traffic series container, missing-value interpolation, and Z-score
//! normalization.

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// N-node, L-step flow signal with sample-rate metadata and an observation
/// mask (`true` = observed).
#[derive(Clone, Debug)]
pub struct TrafficSeries {
    pub node_count: usize,
    pub step_count: usize,
    pub sample_rate_minutes: u32,
    pub values: Matrix,
    pub missing_mask: Vec<bool>,
}

impl TrafficSeries {
    pub fn complete(values: Matrix, sample_rate_minutes: u32) -> Self {
        let (n, l) = values.shape();
        Self {
            node_count: n,
            step_count: l,
            sample_rate_minutes,
            values,
            missing_mask: vec![true; n * l],
        }
    }

    pub fn observed(&self, node: usize, step: usize) -> bool {
        self.missing_mask[node * self.step_count + step]
    }

    pub fn fully_observed(&self) -> bool {
        self.missing_mask.iter().all(|&b| b)
    }
}

/// Scalar normalization statistics, computed from the training split only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    /// Population mean and standard deviation over a slice of values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("cannot compute stats of empty data".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std == 0.0 {
            return Err(Error::Data(
                "training series is constant (std = 0); add jitter or reject the series".into(),
            ));
        }
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }

    pub fn normalize_matrix(&self, m: &Matrix) -> Matrix {
        m.map(|v| self.normalize(v))
    }

    pub fn denormalize_matrix(&self, m: &Matrix) -> Matrix {
        m.map(|v| self.denormalize(v))
    }
}

/// Fill missing entries by per-node linear interpolation between the nearest
/// observed neighbors in time; boundary gaps copy the nearest observed value.
pub fn interpolate_missing(series: &TrafficSeries) -> Result<TrafficSeries> {
    let (n, l) = (series.node_count, series.step_count);
    let mut values = series.values.clone();
    for node in 0..n {
        let observed: Vec<usize> = (0..l).filter(|&t| series.observed(node, t)).collect();
        if observed.is_empty() {
            return Err(Error::Data(format!(
                "node {node} has no observed values; cannot interpolate"
            )));
        }
        // Leading gap: extend the first observation backwards.
        let first = observed[0];
        for t in 0..first {
            values.set(node, t, values.get(node, first));
        }
        // Trailing gap: extend the last observation forwards.
        let last = *observed.last().unwrap();
        for t in last + 1..l {
            values.set(node, t, values.get(node, last));
        }
        // Interior gaps: straight line between bracketing observations.
        for w in observed.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 > t0 + 1 {
                let v0 = values.get(node, t0);
                let v1 = values.get(node, t1);
                let span = (t1 - t0) as f64;
                for t in t0 + 1..t1 {
                    let frac = (t - t0) as f64 / span;
                    values.set(node, t, v0 + frac * (v1 - v0));
                }
            }
        }
    }
    Ok(TrafficSeries {
        node_count: n,
        step_count: l,
        sample_rate_minutes: series.sample_rate_minutes,
        values,
        missing_mask: vec![true; n * l],
    })
}

/// Z-score the whole series with the given stats.
pub fn zscore(series: &TrafficSeries, stats: &NormStats) -> Result<TrafficSeries> {
    if stats.std <= 0.0 {
        return Err(Error::Data(
            "std must be positive; add jitter or reject the series".into(),
        ));
    }
    Ok(TrafficSeries {
        node_count: series.node_count,
        step_count: series.step_count,
        sample_rate_minutes: series.sample_rate_minutes,
        values: stats.normalize_matrix(&series.values),
        missing_mask: series.missing_mask.clone(),
    })
}
