//! Scaling harness: sweep node count N, run a fixed number of training
//! steps per model, and record wall time, instrumented multiply-accumulate
//! counts, and byte accounting. Exponents fitted on log-log FLOPs are the
//! machine-independent restatement of the O(N) versus O(N²) claim.

use serde::Serialize;
use std::time::Instant;

use crate::baseline::{DenseGcn, DenseGcnConfig};
use crate::data::{synth_traffic, window_and_split};
use crate::error::{Error, Result};
use crate::gsnet::{GsNet, GsNetConfig};
use crate::model::Model;
use crate::numkernel::{probe, Adam, Matrix, Tape};
use crate::trainer::batch_loss;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    GsNet,
    Dense,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::GsNet => "gsnet",
            ModelKind::Dense => "dense",
        }
    }
}

/// Sweep-wide knobs. The hyperparameters stay fixed while N varies.
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub s: usize,
    pub t: usize,
    pub d: usize,
    pub layers: usize,
    pub steps: usize,
    pub batch: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Refuse runs whose estimated live bytes exceed this budget; the
    /// record is marked truncated and the sweep continues.
    pub memory_budget_bytes: Option<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            s: 12,
            t: 12,
            d: 4,
            layers: 2,
            steps: 2,
            batch: 2,
            repetitions: 3,
            seed: 0,
            memory_budget_bytes: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRecord {
    pub model_tag: &'static str,
    pub n: usize,
    /// Median wall seconds for the fixed step schedule.
    pub epoch_seconds: f64,
    /// Multiply-accumulate count for one step schedule (identical across
    /// repetitions by construction).
    pub step_flops: u64,
    pub param_bytes: u64,
    /// High-water mark of live matrix bytes during the steps, beyond what
    /// was already resident (parameters, data, optimizer state).
    pub activation_bytes: u64,
    /// Largest single matrix allocated while stepping.
    pub max_alloc_elems: u64,
    pub truncated: bool,
}

/// Run `models` x `ns`, each for `cfg.repetitions` repetitions of
/// `cfg.steps` training steps, and collect one record per (model, N).
pub fn sweep(models: &[ModelKind], ns: &[usize], cfg: &SweepConfig) -> Result<Vec<ScalingRecord>> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Data("node counts must be strictly increasing".into()));
    }
    if cfg.repetitions < 3 {
        return Err(Error::Data("need at least 3 repetitions".into()));
    }
    let mut records = Vec::new();
    for &kind in models {
        for &n in ns {
            records.push(run_cell(kind, n, cfg)?);
        }
    }
    Ok(records)
}

fn run_cell(kind: ModelKind, n: usize, cfg: &SweepConfig) -> Result<ScalingRecord> {
    // Enough steps for `steps` batches of `batch` windows, once.
    let windows_needed = cfg.steps * cfg.batch;
    let l = (cfg.s + cfg.t + windows_needed).max(48);
    let (series, _) = synth_traffic(n, l, cfg.seed.wrapping_add(n as u64), 0.02)?;
    let data = window_and_split(&series, cfg.s, cfg.t, (1.0, 0.0, 0.0))?;

    let mut model: Box<dyn Model> = match kind {
        ModelKind::GsNet => {
            let mut c = GsNetConfig::with_dims(n, cfg.d);
            c.s = cfg.s;
            c.t = cfg.t;
            c.layers = cfg.layers;
            c.seed = cfg.seed;
            Box::new(GsNet::new(c)?)
        }
        ModelKind::Dense => {
            let mut c = DenseGcnConfig::with_dims(n, cfg.d);
            c.s = cfg.s;
            c.t = cfg.t;
            c.layers = cfg.layers;
            c.seed = cfg.seed;
            Box::new(DenseGcn::new(c)?)
        }
    };
    let param_bytes = (model.params().scalar_count() * 8) as u64;

    if let Some(budget) = cfg.memory_budget_bytes {
        let estimate = estimate_live_bytes(kind, n, cfg);
        if estimate > budget {
            return Ok(ScalingRecord {
                model_tag: kind.tag(),
                n,
                epoch_seconds: 0.0,
                step_flops: 0,
                param_bytes,
                activation_bytes: 0,
                max_alloc_elems: 0,
                truncated: true,
            });
        }
    }

    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut flops_per_rep = Vec::with_capacity(cfg.repetitions);
    let mut activation_peak = 0u64;
    let mut max_alloc = 0u64;
    for _ in 0..cfg.repetitions {
        let mut optimizer = {
            let values: Vec<&Matrix> = model.params().values().iter().collect();
            Adam::new(1e-4, &values)
        };
        probe::reset_flops();
        probe::reset_peak_bytes();
        probe::reset_max_alloc_elems();
        let resident = probe::live_bytes();
        let start = Instant::now();
        for step in 0..cfg.steps {
            let lo = step * cfg.batch;
            let inputs: Vec<&Matrix> = (lo..lo + cfg.batch).map(|i| &data.train.inputs[i]).collect();
            let targets: Vec<&Matrix> =
                (lo..lo + cfg.batch).map(|i| &data.train.targets[i]).collect();
            let tape = Tape::new();
            let bound = model.params().bind(&tape);
            let loss = batch_loss(&tape, model.as_ref(), &bound, &inputs, &targets, data.train.stats)?;
            tape.backward(loss)?;
            let grads = bound.grads(&tape);
            let mut values = model.params_mut().values_mut();
            optimizer.step(&mut values, &grads)?;
        }
        times.push(start.elapsed().as_secs_f64());
        flops_per_rep.push(probe::flops());
        activation_peak = activation_peak.max(probe::peak_bytes().saturating_sub(resident));
        max_alloc = max_alloc.max(probe::max_alloc_elems());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = times[times.len() / 2];
    // FLOP counts are deterministic; all repetitions must agree.
    debug_assert!(flops_per_rep.windows(2).all(|w| w[0] == w[1]));

    Ok(ScalingRecord {
        model_tag: kind.tag(),
        n,
        epoch_seconds: median,
        step_flops: flops_per_rep[0],
        param_bytes,
        activation_bytes: activation_peak,
        max_alloc_elems: max_alloc,
        truncated: false,
    })
}

/// Rough upper bound on live bytes for the budget check: parameters and
/// optimizer state, plus NxN tape blocks for the dense model.
fn estimate_live_bytes(kind: ModelKind, n: usize, cfg: &SweepConfig) -> u64 {
    let d = cfg.d;
    let per_window = match kind {
        // Two NxN values plus their gradients per layer.
        ModelKind::Dense => 4 * n * n * cfg.layers,
        ModelKind::GsNet => 40 * n * d * cfg.layers,
    };
    ((per_window * cfg.batch + 20 * n * d) * 8) as u64
}

/// Least-squares slope of log(step_flops) against log(N).
pub fn fit_scaling_exponent(records: &[ScalingRecord]) -> Result<f64> {
    fit_exponent_of(records, |r| r.step_flops as f64)
}

/// Least-squares slope of log(epoch_seconds) against log(N).
pub fn fit_time_exponent(records: &[ScalingRecord]) -> Result<f64> {
    fit_exponent_of(records, |r| r.epoch_seconds)
}

fn fit_exponent_of(records: &[ScalingRecord], f: impl Fn(&ScalingRecord) -> f64) -> Result<f64> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| !r.truncated && f(r) > 0.0)
        .map(|r| ((r.n as f64).ln(), f(r).ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// CSV form: `model,N,epoch_seconds,step_flops,param_bytes,activation_bytes`.
pub fn records_csv(records: &[ScalingRecord]) -> String {
    let mut out = String::from("model,N,epoch_seconds,step_flops,param_bytes,activation_bytes\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{:.6},{},{},{}\n",
            r.model_tag, r.n, r.epoch_seconds, r.step_flops, r.param_bytes, r.activation_bytes
        ));
    }
    out
}

/// JSON summary with fitted exponents per model.
#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub models: Vec<ModelSummary>,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub model_tag: &'static str,
    pub flop_exponent: f64,
    pub time_exponent: f64,
    pub truncated_ns: Vec<usize>,
}

pub fn summarize(records: &[ScalingRecord]) -> Result<SweepSummary> {
    let mut tags: Vec<&'static str> = Vec::new();
    for r in records {
        if !tags.contains(&r.model_tag) {
            tags.push(r.model_tag);
        }
    }
    let mut models = Vec::new();
    for tag in tags {
        let subset: Vec<ScalingRecord> = records
            .iter()
            .filter(|r| r.model_tag == tag)
            .cloned()
            .collect();
        models.push(ModelSummary {
            model_tag: tag,
            flop_exponent: fit_scaling_exponent(&subset)?,
            time_exponent: fit_time_exponent(&subset)?,
            truncated_ns: subset.iter().filter(|r| r.truncated).map(|r| r.n).collect(),
        });
    }
    Ok(SweepSummary { models })
}
