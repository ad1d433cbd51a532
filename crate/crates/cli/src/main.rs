//! Command-line entry point: data generation, training, evaluation, theory
//! verification, and the scaling benchmark.
//!
//! Every command prints its fully resolved configuration as one JSON line
//! before acting, and writes its artifacts under `--out` with fixed names
//! (series.csv, train_log.csv, model.ckpt, metrics.json, gradients.json,
//! theorem.json, sparsity.json, scaling.csv, scaling.json).
//!
//! Exit codes: 0 success, 1 domain error (data/shape/rank/...), 2 usage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gsnet_core::analysis;
use gsnet_core::baseline::{DenseGcn, DenseGcnConfig};
use gsnet_core::bench::{self, ModelKind, SweepConfig};
use gsnet_core::checkpoint::Checkpoint;
use gsnet_core::data;
use gsnet_core::gsnet::{GsNet, GsNetConfig};
use gsnet_core::model::Model;
use gsnet_core::trainer::{self, TrainConfig};
use gsnet_core::Error;

#[derive(Parser)]
#[command(name = "gsnet", version, about = "Linear-complexity graph traffic forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic traffic series with a planted sparse graph.
    GenData(GenDataArgs),
    /// Train a model on a series file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test split.
    Eval(EvalArgs),
    /// Verify gradient bounds and autodiff correctness.
    VerifyGradients(VerifyGradientsArgs),
    /// Verify the rank factorization and its conjugation non-uniqueness.
    VerifyTheorem(VerifyTheoremArgs),
    /// Sparsity statistics of a trained dense adjacency.
    Sparsity(SparsityArgs),
    /// Scaling sweep over node counts.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    #[arg(long, default_value_t = 2016)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Series file, or a directory containing series.csv.
    #[arg(long)]
    data: PathBuf,
    /// Model type: gsnet or dense.
    #[arg(long, default_value = "gsnet")]
    model: String,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chronological split ratios, e.g. 7:1:2 or 6:2:2.
    #[arg(long, default_value = "7:1:2")]
    split: String,
    #[arg(long, default_value_t = 12)]
    s: usize,
    #[arg(long, default_value_t = 12)]
    t: usize,
    /// Embedding channels d (C and C' default to the same value).
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    cprime: Option<usize>,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Optional global L2 gradient clip.
    #[arg(long)]
    grad_clip: Option<f64>,
    /// Zero out the seconds column of the log for byte-reproducible runs.
    #[arg(long, default_value_t = false)]
    no_timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path; defaults to <out>/model.ckpt.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long, default_value = "7:1:2")]
    split: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyGradientsArgs {
    /// Random (E1, E2) draws for the bound scan.
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 32)]
    max_nodes: usize,
    #[arg(long, default_value_t = 8)]
    c: usize,
    /// Seeds for the whole-model finite-difference check.
    #[arg(long, default_value_t = 10)]
    model_seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyTheoremArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SparsityArgs {
    /// Checkpoint of a trained dense model.
    #[arg(long)]
    ckpt: PathBuf,
    /// Threshold; defaults to 1/N.
    #[arg(long)]
    tau: Option<f64>,
    /// Optional planted adjacency (.adj) to report alongside.
    #[arg(long)]
    planted: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated node counts, strictly increasing.
    #[arg(long, default_value = "256,512,1024,2048")]
    ns: String,
    /// Comma-separated model tags from {gsnet, dense}.
    #[arg(long, default_value = "gsnet,dense")]
    models: String,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    steps: usize,
    #[arg(long, default_value_t = 2)]
    batch: usize,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip cells whose estimated footprint exceeds this many megabytes.
    #[arg(long)]
    memory_budget_mb: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

/// `GSNET_SEED` overrides --seed everywhere.
fn effective_seed(flag: u64) -> Result<u64, Error> {
    match std::env::var("GSNET_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::Data(format!("GSNET_SEED must be an integer, got '{v}'"))),
        Err(_) => Ok(flag),
    }
}

fn parse_split(s: &str) -> Result<(f64, f64, f64), Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Data(format!(
            "split must be three colon-separated numbers, got '{s}'"
        )));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    let nums = nums.map_err(|_| Error::Data(format!("non-numeric split component in '{s}'")))?;
    let total: f64 = nums.iter().sum();
    if total <= 0.0 {
        return Err(Error::Data("split ratios must sum to a positive value".into()));
    }
    Ok((nums[0] / total, nums[1] / total, nums[2] / total))
}

fn resolve_series_path(data: &Path) -> PathBuf {
    if data.is_dir() {
        data.join("series.csv")
    } else {
        data.to_path_buf()
    }
}

fn load_windows(
    data: &Path,
    s: usize,
    t: usize,
    ratios: (f64, f64, f64),
) -> Result<data::SplitDatasets, Error> {
    let series = data::read_series(&resolve_series_path(data))?;
    let series = data::interpolate_missing(&series)?;
    data::window_and_split(&series, s, t, ratios)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    fs::write(path, format!("{:#}\n", value))?;
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::GenData(args) => {
            let seed = effective_seed(args.seed)?;
            println!(
                "{}",
                json!({
                    "command": "gen-data",
                    "nodes": args.nodes,
                    "steps": args.steps,
                    "seed": seed,
                    "density": args.density,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let (series, planted) = data::synth_traffic(args.nodes, args.steps, seed, args.density)?;
            data::write_series(&series, &args.out.join("series.csv"))?;
            data::write_adjacency(&planted, &args.out.join("series.adj"))?;
            println!(
                "wrote {} and {}",
                args.out.join("series.csv").display(),
                args.out.join("series.adj").display()
            );
            Ok(())
        }
        Command::Train(args) => {
            let seed = effective_seed(args.seed)?;
            let ratios = parse_split(&args.split)?;
            let c = args.c.unwrap_or(args.dim);
            let cprime = args.cprime.unwrap_or(c);
            println!(
                "{}",
                json!({
                    "command": "train",
                    "data": args.data,
                    "model": args.model,
                    "epochs": args.epochs,
                    "lr": args.lr,
                    "batch": args.batch,
                    "patience": args.patience,
                    "seed": seed,
                    "split": args.split,
                    "s": args.s,
                    "t": args.t,
                    "dim": args.dim,
                    "c": c,
                    "cprime": cprime,
                    "layers": args.layers,
                    "grad_clip": args.grad_clip,
                    "no_timing": args.no_timing,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let windows = load_windows(&args.data, args.s, args.t, ratios)?;
            let n = windows.train.inputs[0].rows();

            let mut model: Box<dyn Model> = match args.model.as_str() {
                "gsnet" => Box::new(GsNet::new(GsNetConfig {
                    n,
                    s: args.s,
                    t: args.t,
                    d: args.dim,
                    c,
                    c_prime: cprime,
                    layers: args.layers,
                    seed,
                })?),
                "dense" => Box::new(DenseGcn::new(DenseGcnConfig {
                    n,
                    s: args.s,
                    t: args.t,
                    d: args.dim,
                    c,
                    layers: args.layers,
                    seed,
                })?),
                other => {
                    return Err(Error::Data(format!(
                        "unknown model '{other}', expected gsnet or dense"
                    )))
                }
            };

            let tc = TrainConfig {
                lr: args.lr,
                batch_size: args.batch,
                max_epochs: args.epochs,
                patience: args.patience,
                seed,
                grad_clip: args.grad_clip,
                timing: !args.no_timing,
            };
            let outcome = trainer::train(model.as_mut(), &windows, &tc)?;
            fs::write(args.out.join("train_log.csv"), outcome.log_csv())?;
            *model.params_mut() = outcome.best_params.clone();
            model.to_checkpoint().save(&args.out.join("model.ckpt"))?;
            println!(
                "best validation MAE {:.6} at epoch {}; wrote {} and {}",
                outcome.best_val_mae,
                outcome.best_epoch,
                args.out.join("train_log.csv").display(),
                args.out.join("model.ckpt").display()
            );
            Ok(())
        }
        Command::Eval(args) => {
            let ckpt_path = args
                .ckpt
                .clone()
                .unwrap_or_else(|| args.out.join("model.ckpt"));
            let ratios = parse_split(&args.split)?;
            println!(
                "{}",
                json!({
                    "command": "eval",
                    "data": args.data,
                    "ckpt": ckpt_path,
                    "split": args.split,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let ck = Checkpoint::load(&ckpt_path)?;
            let model: Box<dyn Model> = match ck.tag.as_str() {
                "gsnet" => Box::new(GsNet::from_checkpoint(&ck)?),
                "dense" => Box::new(DenseGcn::from_checkpoint(&ck)?),
                other => return Err(Error::Checkpoint(format!("unknown model tag '{other}'"))),
            };
            let get = |name: &str| {
                ck.config
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v as usize)
                    .ok_or_else(|| Error::Checkpoint(format!("missing config field '{name}'")))
            };
            let windows = load_windows(&args.data, get("s")?, get("t")?, ratios)?;
            let metrics = trainer::evaluate(model.as_ref(), &windows.test)?;
            write_json(
                &args.out.join("metrics.json"),
                &serde_json::to_value(metrics).expect("serializable"),
            )?;
            println!(
                "test MAE {:.6}, RMSE {:.6}; wrote {}",
                metrics.mae,
                metrics.rmse,
                args.out.join("metrics.json").display()
            );
            Ok(())
        }
        Command::VerifyGradients(args) => {
            let seed = effective_seed(args.seed)?;
            println!(
                "{}",
                json!({
                    "command": "verify-gradients",
                    "draws": args.draws,
                    "max_nodes": args.max_nodes,
                    "c": args.c,
                    "model_seeds": args.model_seeds,
                    "seed": seed,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;

            let bound = analysis::softmax_bound_scan(args.draws, args.max_nodes, args.c, seed);
            let anomaly = analysis::kernel_anomaly_scan(args.draws, seed.wrapping_add(1));

            // Whole-model finite-difference check on a toy instance.
            let mut worst_model = 0.0f64;
            for s in 0..args.model_seeds {
                worst_model = worst_model.max(toy_model_grad_check(seed.wrapping_add(s))?);
            }

            let report = json!({
                "softmax": serde_json::to_value(&bound).expect("serializable"),
                "kernel": serde_json::to_value(&anomaly).expect("serializable"),
                "model_grad_check_max_rel_err": worst_model,
            });
            write_json(&args.out.join("gradients.json"), &report)?;
            println!(
                "softmax bound max {:.6} ({} violations), kernel max {:.3e}, model check {:.3e}; wrote {}",
                bound.bound_max,
                bound.violations,
                anomaly.kernel_max,
                worst_model,
                args.out.join("gradients.json").display()
            );
            if bound.violations > 0 {
                return Err(Error::Domain(
                    "softmax adjacency partial exceeded the 1/4 bound".into(),
                ));
            }
            if worst_model >= 1e-4 {
                return Err(Error::Evaluation(format!(
                    "whole-model gradient check failed: {worst_model}"
                )));
            }
            Ok(())
        }
        Command::VerifyTheorem(args) => {
            let seed = effective_seed(args.seed)?;
            println!(
                "{}",
                json!({
                    "command": "verify-theorem",
                    "n": args.n,
                    "rank": args.rank,
                    "trials": args.trials,
                    "seed": seed,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let mut rng = gsnet_core::rng::Rng::seed_from_u64(seed);
            let mut max_residual = 0.0f64;
            let mut max_conj_residual = 0.0f64;
            let mut distinct = 0usize;
            for _ in 0..args.trials {
                let e1 = random_matrix(&mut rng, args.n, args.rank);
                let e2 = random_matrix(&mut rng, args.rank, args.n);
                let m = e1.matmul(&e2)?;
                let f = analysis::rank_factorize(&m, args.rank)?;
                max_residual = max_residual.max(f.residual(&m)?);
                let g = loop {
                    let d = random_matrix(&mut rng, args.rank, args.rank);
                    match analysis::conjugate_factorization(&f, &d) {
                        Ok(g) => break g,
                        Err(Error::Singular(_)) => continue,
                        Err(e) => return Err(e),
                    }
                };
                max_conj_residual = max_conj_residual.max(g.residual(&m)?);
                if g.k.sub(&f.k)?.max_abs() > 1e-12 {
                    distinct += 1;
                }
            }
            let report = json!({
                "trials": args.trials,
                "n": args.n,
                "rank": args.rank,
                "max_residual": max_residual,
                "max_conjugation_residual": max_conj_residual,
                "distinct_conjugated_cores": distinct,
            });
            write_json(&args.out.join("theorem.json"), &report)?;
            println!(
                "max residual {:.3e}, max conjugated residual {:.3e}, {}/{} distinct cores; wrote {}",
                max_residual,
                max_conj_residual,
                distinct,
                args.trials,
                args.out.join("theorem.json").display()
            );
            if max_residual >= 1e-8 || max_conj_residual >= 1e-8 {
                return Err(Error::Evaluation(
                    "reconstruction residual exceeded 1e-8".into(),
                ));
            }
            if distinct != args.trials {
                return Err(Error::Evaluation(
                    "a conjugation failed to produce a distinct core".into(),
                ));
            }
            Ok(())
        }
        Command::Sparsity(args) => {
            println!(
                "{}",
                json!({
                    "command": "sparsity",
                    "ckpt": args.ckpt,
                    "tau": args.tau,
                    "planted": args.planted,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let ck = Checkpoint::load(&args.ckpt)?;
            if ck.tag != "dense" {
                return Err(Error::Data(format!(
                    "sparsity statistics need a dense checkpoint (an NxN adjacency); got '{}'",
                    ck.tag
                )));
            }
            let model = DenseGcn::from_checkpoint(&ck)?;
            let a = model.adjacency()?;
            let n = a.rows();
            let tau = args.tau.unwrap_or(1.0 / n as f64);
            let report = analysis::sparsity_report(&a)?;
            let mut value =
                serde_json::to_value(report.summarize(tau, 10)).expect("serializable");
            if let Some(planted_path) = &args.planted {
                let planted = data::read_adjacency(planted_path)?;
                let planted_report = analysis::sparsity_report(&planted)?;
                value["planted"] =
                    serde_json::to_value(planted_report.summarize(tau, 10)).expect("serializable");
            }
            write_json(&args.out.join("sparsity.json"), &value)?;
            println!(
                "fraction_above({tau:.6}) = {:.4}, gini = {:.4}; wrote {}",
                report.fraction_above(tau),
                report.gini,
                args.out.join("sparsity.json").display()
            );
            Ok(())
        }
        Command::Bench(args) => {
            let seed = effective_seed(args.seed)?;
            let ns: Result<Vec<usize>, _> = args.ns.split(',').map(|p| p.trim().parse()).collect();
            let ns = ns.map_err(|_| Error::Data(format!("bad node list '{}'", args.ns)))?;
            let mut kinds = Vec::new();
            for tag in args.models.split(',') {
                kinds.push(match tag.trim() {
                    "gsnet" => ModelKind::GsNet,
                    "dense" => ModelKind::Dense,
                    other => {
                        return Err(Error::Data(format!(
                            "unknown model '{other}', expected gsnet or dense"
                        )))
                    }
                });
            }
            println!(
                "{}",
                json!({
                    "command": "bench",
                    "ns": ns,
                    "models": args.models,
                    "reps": args.reps,
                    "steps": args.steps,
                    "batch": args.batch,
                    "dim": args.dim,
                    "layers": args.layers,
                    "seed": seed,
                    "memory_budget_mb": args.memory_budget_mb,
                    "out": args.out,
                })
            );
            fs::create_dir_all(&args.out)?;
            let cfg = SweepConfig {
                d: args.dim,
                layers: args.layers,
                steps: args.steps,
                batch: args.batch,
                repetitions: args.reps,
                seed,
                memory_budget_bytes: args.memory_budget_mb.map(|mb| mb * 1024 * 1024),
                ..Default::default()
            };
            let records = bench::sweep(&kinds, &ns, &cfg)?;
            fs::write(args.out.join("scaling.csv"), bench::records_csv(&records))?;
            let summary = bench::summarize(&records)?;
            write_json(
                &args.out.join("scaling.json"),
                &serde_json::to_value(&summary).expect("serializable"),
            )?;
            for m in &summary.models {
                println!(
                    "{}: flop exponent {:.3}, time exponent {:.3}",
                    m.model_tag, m.flop_exponent, m.time_exponent
                );
            }
            println!(
                "wrote {} and {}",
                args.out.join("scaling.csv").display(),
                args.out.join("scaling.json").display()
            );
            Ok(())
        }
    }
}

fn random_matrix(
    rng: &mut gsnet_core::rng::Rng,
    r: usize,
    c: usize,
) -> gsnet_core::numkernel::Matrix {
    gsnet_core::numkernel::Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .expect("shape")
}

/// Whole-model gradient check on a 6-node toy batch.
fn toy_model_grad_check(seed: u64) -> Result<f64, Error> {
    let cfg = GsNetConfig {
        n: 6,
        s: 12,
        t: 12,
        d: 4,
        c: 4,
        c_prime: 4,
        layers: 3,
        seed,
    };
    let model = GsNet::new(cfg)?;
    let (series, _) = data::synth_traffic(cfg.n, 96, seed.wrapping_add(100), 0.2)?;
    let windows = data::window_and_split(&series, cfg.s, cfg.t, (1.0, 0.0, 0.0))?;
    let inputs: Vec<&gsnet_core::numkernel::Matrix> = windows.train.inputs.iter().take(2).collect();
    let targets: Vec<&gsnet_core::numkernel::Matrix> =
        windows.train.targets.iter().take(2).collect();
    trainer::model_grad_check(&model, &inputs, &targets, windows.train.stats, 1e-5)
}
