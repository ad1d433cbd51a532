//! Chronological splitting and sliding-window extraction.

use crate::data::series::{NormStats, TrafficSeries};
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

/// Aligned (input, target) sample pairs from one chronological split.
/// Inputs and targets are stored normalized; `stats` invert the mapping.
#[derive(Debug)]
pub struct WindowedDataset {
    pub inputs: Vec<Matrix>,
    pub targets: Vec<Matrix>,
    pub stats: NormStats,
    pub split: SplitTag,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug)]
pub struct SplitDatasets {
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

/// Split the timeline chronologically by `ratios`, compute normalization
/// statistics from the raw training region only, normalize, and cut
/// stride-1 windows of `s` input steps and `t` target steps inside each
/// split. No window crosses a split boundary.
pub fn window_and_split(
    series: &TrafficSeries,
    s: usize,
    t: usize,
    ratios: (f64, f64, f64),
) -> Result<SplitDatasets> {
    if !series.fully_observed() {
        return Err(Error::Data(
            "series contains missing values; interpolate first".into(),
        ));
    }
    if s == 0 || t == 0 {
        return Err(Error::Data("window sizes must be positive".into()));
    }
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if (sum - 1.0).abs() > 1e-6 || r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::Data(format!(
            "split ratios must be nonnegative and sum to 1, got {ratios:?}"
        )));
    }
    let l = series.step_count;
    let train_len = (l as f64 * r_train).floor() as usize;
    let val_len = (l as f64 * r_val).floor() as usize;
    let test_len = l - train_len - val_len;

    let min_len = s + t;
    for (name, ratio, len) in [
        ("train", r_train, train_len),
        ("val", r_val, val_len),
        ("test", r_test, test_len),
    ] {
        if ratio > 0.0 && len < min_len {
            return Err(Error::Data(format!(
                "{name} split has {len} steps but needs at least {min_len} (S + T) for one window"
            )));
        }
    }

    // Stats from the raw training region only; never from val or test.
    let n = series.node_count;
    let mut train_values = Vec::with_capacity(n * train_len);
    for node in 0..n {
        for step in 0..train_len {
            train_values.push(series.values.get(node, step));
        }
    }
    let stats = NormStats::from_values(&train_values)?;
    let normalized = stats.normalize_matrix(&series.values);

    let cut = |start: usize, len: usize, split: SplitTag| -> WindowedDataset {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        if len >= min_len {
            for offset in 0..=(len - min_len) {
                let begin = start + offset;
                inputs.push(normalized.slice_cols(begin, begin + s));
                targets.push(normalized.slice_cols(begin + s, begin + s + t));
            }
        }
        WindowedDataset {
            inputs,
            targets,
            stats,
            split,
        }
    };

    Ok(SplitDatasets {
        train: cut(0, train_len, SplitTag::Train),
        val: cut(train_len, val_len, SplitTag::Val),
        test: cut(train_len + val_len, test_len, SplitTag::Test),
    })
}

/// Windows produced by a split of length `len`: len − S − T + 1, or zero if
/// the split is too short.
pub fn window_count(len: usize, s: usize, t: usize) -> usize {
    if len >= s + t {
        len - s - t + 1
    } else {
        0
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn count_formula_holds_exactly(l in 2usize..400, s in 1usize..20, t in 1usize..20) {
            prop_assume!(l >= s + t);
            let series = crate::data::series::TrafficSeries::complete(
                Matrix::new(1, l, (0..l).map(|i| (i % 17) as f64).collect()).unwrap(),
                5,
            );
            if let Ok(out) = window_and_split(&series, s, t, (1.0, 0.0, 0.0)) {
                prop_assert_eq!(out.train.len(), l - s - t + 1);
                prop_assert_eq!(out.train.len(), window_count(l, s, t));
            }
        }
    }
}
