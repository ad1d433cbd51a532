//! Training loop, evaluation metrics, early stopping, and the training log.

use std::time::Instant;

use serde::Serialize;

use crate::data::{SplitDatasets, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numkernel::{Adam, Matrix, Tape, Var};
use crate::params::{BoundParams, ParamSet};
use crate::rng::Rng;

/// Targets below this magnitude (flow units) are excluded from MAPE so
/// near-zero denominators cannot blow the metric up.
pub const MAPE_FLOOR: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Optional global L2 gradient clip. Off by default.
    pub grad_clip: Option<f64>,
    /// When false the log's seconds column is written as zero, making two
    /// runs of the same config byte-identical.
    pub timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 16,
            max_epochs: 50,
            patience: 10,
            seed: 0,
            grad_clip: None,
            timing: true,
        }
    }
}

/// Denormalized-scale error metrics. `mape` is `None` when every target sits
/// below [`MAPE_FLOOR`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Metrics {
    pub mae: f64,
    pub mape: Option<f64>,
    pub rmse: f64,
}

/// MAE / MAPE / RMSE over one (prediction, truth) pair in denormalized units.
pub fn compute_metrics(pred: &Matrix, truth: &Matrix) -> Result<Metrics> {
    if pred.shape() != truth.shape() {
        return Err(Error::Shape {
            op: "compute_metrics",
            left_rows: pred.rows(),
            left_cols: pred.cols(),
            right_rows: truth.rows(),
            right_cols: truth.cols(),
        });
    }
    let mut acc = MetricAccumulator::new();
    acc.update(pred, truth);
    Ok(acc.finish())
}

/// Streaming accumulator so metrics aggregate across many windows.
pub struct MetricAccumulator {
    abs_sum: f64,
    sq_sum: f64,
    count: usize,
    pct_sum: f64,
    pct_count: usize,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self {
            abs_sum: 0.0,
            sq_sum: 0.0,
            count: 0,
            pct_sum: 0.0,
            pct_count: 0,
        }
    }

    pub fn update(&mut self, pred: &Matrix, truth: &Matrix) {
        debug_assert_eq!(pred.shape(), truth.shape());
        for (p, t) in pred.data().iter().zip(truth.data()) {
            let d = p - t;
            self.abs_sum += d.abs();
            self.sq_sum += d * d;
            self.count += 1;
            if t.abs() > MAPE_FLOOR {
                self.pct_sum += (d / t).abs();
                self.pct_count += 1;
            }
        }
    }

    pub fn finish(&self) -> Metrics {
        let n = self.count.max(1) as f64;
        Metrics {
            mae: self.abs_sum / n,
            mape: if self.pct_count > 0 {
                Some(100.0 * self.pct_sum / self.pct_count as f64)
            } else {
                None
            },
            rmse: (self.sq_sum / n).sqrt(),
        }
    }
}

impl Default for MetricAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mae: f64,
    pub val_mae: f64,
    pub val_mape: Option<f64>,
    pub val_rmse: f64,
    pub seconds: f64,
}

pub struct TrainOutcome {
    pub log: Vec<EpochRecord>,
    pub best_params: ParamSet,
    pub best_val_mae: f64,
    pub best_epoch: usize,
}

impl TrainOutcome {
    /// CSV form of the log: `epoch,train_mae,val_mae,val_mape,val_rmse,seconds`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("epoch,train_mae,val_mae,val_mape,val_rmse,seconds\n");
        for r in &self.log {
            let mape = r
                .val_mape
                .map(|v| format!("{v}"))
                .unwrap_or_else(|| "nan".to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                r.epoch, r.train_mae, r.val_mae, mape, r.val_rmse, r.seconds
            ));
        }
        out
    }
}

/// Denormalized MAE over a batch of windows, averaged window by window.
/// The model predicts in normalized space; predictions are mapped back to
/// flow units on the tape so the gradient carries the scale factor.
pub fn batch_loss<'t>(
    tape: &'t Tape,
    model: &dyn Model,
    bound: &BoundParams<'t>,
    inputs: &[&Matrix],
    targets: &[&Matrix],
    stats: crate::data::NormStats,
) -> Result<Var<'t>> {
    debug_assert_eq!(inputs.len(), targets.len());
    let preds = model.forward_batch(tape, bound, inputs)?;
    let mut total: Option<Var<'t>> = None;
    for (pred, target) in preds.into_iter().zip(targets) {
        let denorm = pred.mul_scalar(stats.std).add_scalar(stats.mean);
        let target_denorm = stats.denormalize_matrix(target);
        let loss = denorm.mae_against(&target_denorm)?;
        total = Some(match total {
            None => loss,
            Some(acc) => acc.add(loss)?,
        });
    }
    Ok(total
        .ok_or_else(|| Error::Data("empty batch".into()))?
        .mul_scalar(1.0 / inputs.len() as f64))
}

/// Evaluate a model over a windowed dataset on the denormalized scale.
pub fn evaluate(model: &dyn Model, data: &WindowedDataset) -> Result<Metrics> {
    let mut acc = MetricAccumulator::new();
    for (input, target) in data.inputs.iter().zip(&data.targets) {
        let pred = model.predict(input)?;
        let pred_denorm = data.stats.denormalize_matrix(&pred);
        let target_denorm = data.stats.denormalize_matrix(target);
        acc.update(&pred_denorm, &target_denorm);
    }
    Ok(acc.finish())
}

/// Train with shuffled minibatches, Adam, MAE loss on the denormalized
/// scale, validation tracking, and early stopping. The best-on-validation
/// parameter snapshot is retained and returned.
pub fn train(
    model: &mut dyn Model,
    data: &SplitDatasets,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if cfg.lr < 0.0 {
        return Err(Error::Data("learning rate must be nonnegative".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Data("batch size must be at least 1".into()));
    }
    if data.train.is_empty() {
        return Err(Error::Data("training split has no windows".into()));
    }
    let stats = data.train.stats;
    let mut optimizer = {
        let values: Vec<&Matrix> = model.params().values().iter().collect();
        Adam::new(cfg.lr, &values)
    };

    let mut log = Vec::new();
    let mut best_params = model.params().clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs_since_best = 0;

    let n_windows = data.train.len();
    let mut order: Vec<usize> = (0..n_windows).collect();

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        // Fresh shuffle stream per epoch, derived from (seed, epoch) so the
        // schedule is reproducible regardless of how many epochs ran before.
        let mut shuffle_rng = Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64));
        shuffle_rng.shuffle(&mut order);

        let mut train_acc = MetricAccumulator::new();
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<&Matrix> = chunk.iter().map(|&i| &data.train.inputs[i]).collect();
            let targets: Vec<&Matrix> = chunk.iter().map(|&i| &data.train.targets[i]).collect();

            let tape = Tape::new();
            let bound = model.params().bind(&tape);
            let loss = batch_loss(&tape, model, &bound, &inputs, &targets, stats)?;
            let loss_value = tape.scalar(loss);
            if !loss_value.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite loss at epoch {epoch}, window batch starting {}",
                    chunk[0]
                )));
            }
            // The batch loss is itself the denormalized MAE of the batch.
            train_acc.abs_sum += loss_value * (chunk.len() as f64);
            train_acc.count += chunk.len();

            tape.backward(loss)?;
            let mut grads = bound.grads(&tape);
            if let Some(max_norm) = cfg.grad_clip {
                clip_global_norm(&mut grads, max_norm);
            }
            let mut values = model.params_mut().values_mut();
            optimizer.step(&mut values, &grads)?;
        }
        if !model.params().all_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite parameters after epoch {epoch}"
            )));
        }
        let train_mae = train_acc.abs_sum / train_acc.count.max(1) as f64;

        // Validation in fixed chronological order; falls back to the
        // training metric when the validation split is empty.
        let (val_mae, val_mape, val_rmse) = if data.val.is_empty() {
            (train_mae, None, f64::NAN)
        } else {
            let m = evaluate(model, &data.val)?;
            (m.mae, m.mape, m.rmse)
        };

        let seconds = if cfg.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        log.push(EpochRecord {
            epoch,
            train_mae,
            val_mae,
            val_mape,
            val_rmse,
            seconds,
        });

        if val_mae < best_val {
            best_val = val_mae;
            best_epoch = epoch;
            best_params = model.params().clone();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        log,
        best_params,
        best_val_mae: best_val,
        best_epoch,
    })
}

/// Finite-difference check of the full composed model: for every parameter
/// matrix, compare the taped gradient of the batch loss against central
/// differences. Returns the worst relative error across all parameters.
pub fn model_grad_check(
    model: &dyn Model,
    inputs: &[&Matrix],
    targets: &[&Matrix],
    stats: crate::data::NormStats,
    eps: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for idx in 0..model.params().len() {
        let probe = model.params().values()[idx].clone();
        let err = crate::numkernel::grad_check(
            |tape, v| {
                let vars: Vec<Var> = model
                    .params()
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, m)| if i == idx { v } else { tape.leaf(m.clone()) })
                    .collect();
                let bound = BoundParams::from_vars(vars);
                batch_loss(tape, model, &bound, inputs, targets, stats)
            },
            &probe,
            eps,
        )?;
        worst = worst.max(err);
    }
    Ok(worst)
}

fn clip_global_norm(grads: &mut [Matrix], max_norm: f64) {
    let total: f64 = grads
        .iter()
        .map(|g| g.data().iter().map(|v| v * v).sum::<f64>())
        .sum();
    let norm = total.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= scale;
            }
        }
    }
}
