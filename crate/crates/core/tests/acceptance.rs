//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them).
//!
//! Criteria at a glance:
//!  1. softmax adjacency partials never exceed 1/4 over 10^4 draws
//!  2. linear-normalization partials blow past 10^3 on tiny scores while
//!     softmax stays bounded on the same draws
//!  3. rank factorization reconstructs to < 1e-8 and conjugation yields
//!     distinct cores with identical reconstruction, 100 trials
//!  4. whole-model finite-difference gradient check < 1e-4 over 10 seeds
//!  5. fitted log-log FLOP exponent: model ~1, dense baseline ~2; the model
//!     never allocates an NxN activation
//!  6. parameter count exactly linear in N
//!  7. trained model beats 0.8x the historical-average MAE and stays within
//!     1.1x of the dense baseline on the synthetic task
//!  8. trained dense adjacency is sparse: fraction_above(1/N) < 0.2, Gini > 0.5
//!  9. MAE/MAPE/RMSE match a scalar-loop oracle to 1e-10; RMSE >= MAE
//! 10. identical seed/config gives bitwise-identical checkpoints and logs

use std::sync::OnceLock;
use std::time::Instant;

use gsnet_core::analysis;
use gsnet_core::baseline::{historical_average, DenseGcn, DenseGcnConfig};
use gsnet_core::bench::{self, ModelKind, SweepConfig};
use gsnet_core::data::{synth_traffic, window_and_split, SplitDatasets};
use gsnet_core::gsnet::{GsNet, GsNetConfig};
use gsnet_core::model::Model;
use gsnet_core::numkernel::Matrix;
use gsnet_core::params::bitwise_equal;
use gsnet_core::rng::Rng;
use gsnet_core::trainer::{
    self, compute_metrics, evaluate, train, MetricAccumulator, TrainConfig, MAPE_FLOOR,
};

// ---------------------------------------------------------------------------
// Shared fixtures (built once, reused across tests)
// ---------------------------------------------------------------------------

/// N=50 forecast task: historical average, trained model, trained dense
/// baseline.
struct ForecastFixture {
    data: SplitDatasets,
    gsnet: GsNet,
    gsnet_config: GsNetConfig,
    gsnet_log_prefix: Vec<String>,
    ha_test_mae: f64,
    gsnet_test_mae: f64,
    gsnet_val_mae: f64,
    dense_test_mae: f64,
    build_seconds: f64,
}

fn forecast_fixture() -> &'static ForecastFixture {
    static FIXTURE: OnceLock<ForecastFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let start = Instant::now();
        let (series, _) = synth_traffic(50, 2016, 7, 0.05).unwrap();
        let data = window_and_split(&series, 12, 12, (0.7, 0.1, 0.2)).unwrap();

        let mut ha = MetricAccumulator::new();
        for (inp, tgt) in data.test.inputs.iter().zip(&data.test.targets) {
            let inp_raw = data.test.stats.denormalize_matrix(inp);
            let tgt_raw = data.test.stats.denormalize_matrix(tgt);
            ha.update(&historical_average(&inp_raw, 12), &tgt_raw);
        }
        let ha_test_mae = ha.finish().mae;

        let gsnet_config = GsNetConfig {
            n: 50,
            s: 12,
            t: 12,
            d: 8,
            c: 8,
            c_prime: 8,
            layers: 3,
            seed: 0,
        };
        let gsnet_tc = TrainConfig {
            lr: 2e-3,
            batch_size: 16,
            max_epochs: 30,
            patience: 8,
            seed: 0,
            timing: false,
            ..Default::default()
        };
        let mut gsnet = GsNet::new(gsnet_config).unwrap();
        let out = train(&mut gsnet, &data, &gsnet_tc).unwrap();
        *gsnet.params_mut() = out.best_params.clone();
        let gsnet_test_mae = evaluate(&gsnet, &data.test).unwrap().mae;
        let gsnet_val_mae = evaluate(&gsnet, &data.val).unwrap().mae;
        let gsnet_log_prefix: Vec<String> = out
            .log_csv()
            .lines()
            .take(3)
            .map(|l| l.to_string())
            .collect();

        let dense_config = DenseGcnConfig {
            n: 50,
            s: 12,
            t: 12,
            d: 8,
            c: 8,
            layers: 3,
            seed: 0,
        };
        let dense_tc = TrainConfig {
            lr: 1e-2,
            batch_size: 16,
            max_epochs: 30,
            patience: 8,
            seed: 0,
            timing: false,
            ..Default::default()
        };
        let mut dense = DenseGcn::new(dense_config).unwrap();
        let dout = train(&mut dense, &data, &dense_tc).unwrap();
        *dense.params_mut() = dout.best_params.clone();
        let dense_test_mae = evaluate(&dense, &data.test).unwrap().mae;

        ForecastFixture {
            data,
            gsnet,
            gsnet_config,
            gsnet_log_prefix,
            ha_test_mae,
            gsnet_test_mae,
            gsnet_val_mae,
            dense_test_mae,
            build_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

/// N=170 dense baseline trained until its adjacency concentrates.
struct SparsityFixture {
    fraction_above_uniform: f64,
    gini: f64,
}

fn sparsity_fixture() -> &'static SparsityFixture {
    static FIXTURE: OnceLock<SparsityFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let n = 170;
        let (series, _) = synth_traffic(n, 2016, 7, 0.05).unwrap();
        let data = window_and_split(&series, 12, 12, (0.7, 0.1, 0.2)).unwrap();
        let config = DenseGcnConfig {
            n,
            s: 12,
            t: 12,
            d: 8,
            c: 8,
            layers: 3,
            seed: 0,
        };
        let tc = TrainConfig {
            lr: 1e-2,
            batch_size: 16,
            max_epochs: 60,
            patience: 60,
            seed: 0,
            timing: false,
            ..Default::default()
        };
        let mut dense = DenseGcn::new(config).unwrap();
        // Keep the final-epoch parameters: row concentration keeps
        // developing after the best validation epoch.
        train(&mut dense, &data, &tc).unwrap();
        let a = dense.adjacency().unwrap();
        let report = analysis::sparsity_report(&a).unwrap();
        SparsityFixture {
            fraction_above_uniform: report.fraction_above(1.0 / n as f64),
            gini: report.gini,
        }
    })
}

fn sweep_fixture() -> &'static Vec<bench::ScalingRecord> {
    static FIXTURE: OnceLock<Vec<bench::ScalingRecord>> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let cfg = SweepConfig {
            d: 4,
            layers: 2,
            steps: 2,
            batch: 2,
            repetitions: 3,
            seed: 0,
            ..Default::default()
        };
        bench::sweep(
            &[ModelKind::GsNet, ModelKind::Dense],
            &[256, 512, 1024, 2048],
            &cfg,
        )
        .unwrap()
    })
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_softmax_gradient_bound() {
    let start = Instant::now();
    let report = analysis::softmax_bound_scan(10_000, 32, 8, 0);
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(
        report.violations, 0,
        "softmax partial exceeded 1/4 in {} of {} draws (max {})",
        report.violations, report.draws, report.bound_max
    );
    assert!(report.bound_max <= 0.25 + 1e-12);
    assert!(elapsed < 60.0, "bound scan took {elapsed:.1}s, budget 60s");
    println!(
        "criterion 1 PASS: softmax gradient bound — max |dA/ds| = {:.15} <= 0.25 over {} draws ({elapsed:.1}s)",
        report.bound_max, report.draws
    );
}

#[test]
fn criterion_2_kernel_gradient_anomaly() {
    let report = analysis::kernel_anomaly_scan(10_000, 1);
    assert!(
        report.min_score_seen <= 1e-4,
        "scan never probed tiny scores (min {})",
        report.min_score_seen
    );
    assert!(
        report.kernel_max > 1e3,
        "linear-normalization partial stayed at {}, expected an anomaly > 1e3",
        report.kernel_max
    );
    assert!(
        report.softmax_max <= 0.25 + 1e-12,
        "softmax partial {} escaped its bound on the same draws",
        report.softmax_max
    );
    println!(
        "criterion 2 PASS: kernel anomaly — linear-normalization partial reached {:.3e} (softmax stayed at {:.6}) over {} draws",
        report.kernel_max, report.softmax_max, report.draws
    );
}

#[test]
fn criterion_3_rank_factorization_theorem() {
    let start = Instant::now();
    let mut rng = Rng::seed_from_u64(0);
    let n = 20;
    let c = 4;
    let trials = 100;
    let mut max_residual = 0.0f64;
    let mut max_conj_residual = 0.0f64;
    for _ in 0..trials {
        let e1 = random_matrix(&mut rng, n, c);
        let e2 = random_matrix(&mut rng, c, n);
        let m = e1.matmul(&e2).unwrap();
        let f = analysis::rank_factorize(&m, c).unwrap();
        max_residual = max_residual.max(f.residual(&m).unwrap());
        let g = loop {
            let d = random_matrix(&mut rng, c, c);
            match analysis::conjugate_factorization(&f, &d) {
                Ok(g) => break g,
                Err(gsnet_core::Error::Singular(_)) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            }
        };
        max_conj_residual = max_conj_residual.max(g.residual(&m).unwrap());
        let core_change = g.k.sub(&f.k).unwrap().max_abs();
        assert!(
            core_change > 1e-12,
            "conjugation produced an identical core (change {core_change})"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        max_residual < 1e-8,
        "reconstruction residual {max_residual} over budget"
    );
    assert!(
        max_conj_residual < 1e-8,
        "conjugated reconstruction residual {max_conj_residual} over budget"
    );
    assert!(elapsed < 60.0, "theorem check took {elapsed:.1}s, budget 60s");
    println!(
        "criterion 3 PASS: rank factorization — max residual {max_residual:.3e}, max conjugated residual {max_conj_residual:.3e}, {trials}/{trials} distinct cores ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_4_whole_model_gradient_check() {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let config = GsNetConfig {
            n: 6,
            s: 12,
            t: 12,
            d: 4,
            c: 4,
            c_prime: 4,
            layers: 3,
            seed,
        };
        let model = GsNet::new(config).unwrap();
        let (series, _) = synth_traffic(config.n, 96, seed.wrapping_add(100), 0.2).unwrap();
        let windows = window_and_split(&series, config.s, config.t, (1.0, 0.0, 0.0)).unwrap();
        let inputs: Vec<&Matrix> = windows.train.inputs.iter().take(2).collect();
        let targets: Vec<&Matrix> = windows.train.targets.iter().take(2).collect();
        let err =
            trainer::model_grad_check(&model, &inputs, &targets, windows.train.stats, 1e-5)
                .unwrap();
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
        worst = worst.max(err);
    }
    println!(
        "criterion 4 PASS: whole-model gradient check — max relative error {worst:.3e} < 1e-4 over 10 seeds"
    );
}

#[test]
fn criterion_5_linear_scaling() {
    let start = Instant::now();
    let records = sweep_fixture();
    let elapsed = start.elapsed().as_secs_f64();

    let gsnet: Vec<_> = records
        .iter()
        .filter(|r| r.model_tag == "gsnet")
        .cloned()
        .collect();
    let dense: Vec<_> = records
        .iter()
        .filter(|r| r.model_tag == "dense")
        .cloned()
        .collect();
    let gsnet_exp = bench::fit_scaling_exponent(&gsnet).unwrap();
    let dense_exp = bench::fit_scaling_exponent(&dense).unwrap();
    assert!(
        (0.9..=1.2).contains(&gsnet_exp),
        "model FLOP exponent {gsnet_exp} outside [0.9, 1.2]"
    );
    assert!(
        (1.8..=2.2).contains(&dense_exp),
        "dense FLOP exponent {dense_exp} outside [1.8, 2.2]"
    );

    // Doubling ratios, pairwise.
    for pair in gsnet.windows(2) {
        let ratio = pair[1].step_flops as f64 / pair[0].step_flops as f64;
        assert!(
            (1.9..=2.1).contains(&ratio),
            "model FLOP doubling ratio {ratio} at N={}",
            pair[1].n
        );
    }
    for pair in dense.windows(2) {
        let ratio = pair[1].step_flops as f64 / pair[0].step_flops as f64;
        assert!(
            (3.6..=4.4).contains(&ratio),
            "dense FLOP doubling ratio {ratio} at N={}",
            pair[1].n
        );
    }

    // The model must never touch an NxN activation.
    for r in &gsnet {
        assert!(
            r.max_alloc_elems < (r.n * r.n) as u64,
            "N={}: largest allocation {} elements reaches NxN",
            r.n,
            r.max_alloc_elems
        );
    }
    assert!(elapsed < 600.0, "sweep took {elapsed:.1}s, budget 600s");
    println!(
        "criterion 5 PASS: linear scaling — FLOP exponents: model {gsnet_exp:.3}, dense {dense_exp:.3}; no NxN allocation ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_6_parameter_count_linearity() {
    for n in [64usize, 170, 1000] {
        let count = |nodes: usize| {
            let mut c = GsNetConfig::with_dims(nodes, 16);
            c.n = nodes;
            c.param_count() as i64
        };
        let d1 = count(2 * n) - count(n);
        let d2 = count(3 * n) - count(2 * n);
        assert_eq!(d1, d2, "second difference nonzero at N={n}");
    }
    println!("criterion 6 PASS: parameter count exactly linear in N (three base sizes)");
}

#[test]
fn criterion_7_forecast_quality() {
    let fx = forecast_fixture();
    assert!(
        fx.gsnet_test_mae <= 0.8 * fx.ha_test_mae,
        "model MAE {:.4} not within 0.8x of historical average {:.4}",
        fx.gsnet_test_mae,
        fx.ha_test_mae
    );
    assert!(
        fx.gsnet_test_mae <= 1.1 * fx.dense_test_mae,
        "model MAE {:.4} not within 1.1x of dense baseline {:.4}",
        fx.gsnet_test_mae,
        fx.dense_test_mae
    );
    assert!(
        fx.build_seconds < 900.0,
        "fixture took {:.0}s, budget 900s",
        fx.build_seconds
    );

    // Determinism spot check: replaying the first two epochs with the same
    // seed/config reproduces the log prefix byte for byte.
    let tc = TrainConfig {
        lr: 2e-3,
        batch_size: 16,
        max_epochs: 2,
        patience: 8,
        seed: 0,
        timing: false,
        ..Default::default()
    };
    let mut replay = GsNet::new(fx.gsnet_config).unwrap();
    let out = train(&mut replay, &fx.data, &tc).unwrap();
    for (line, expected) in out.log_csv().lines().zip(&fx.gsnet_log_prefix) {
        assert_eq!(line, expected, "training log prefix diverged");
    }

    println!(
        "criterion 7 PASS: forecast quality — model {:.4} vs HA {:.4} (ratio {:.3} <= 0.8) and dense {:.4} (ratio {:.3} <= 1.1) in {:.0}s",
        fx.gsnet_test_mae,
        fx.ha_test_mae,
        fx.gsnet_test_mae / fx.ha_test_mae,
        fx.dense_test_mae,
        fx.gsnet_test_mae / fx.dense_test_mae,
        fx.build_seconds
    );
}

#[test]
fn criterion_8_adjacency_sparsity() {
    let fx = sparsity_fixture();
    assert!(
        fx.fraction_above_uniform < 0.2,
        "fraction_above(1/N) = {:.4}, need < 0.2",
        fx.fraction_above_uniform
    );
    assert!(fx.gini > 0.5, "Gini = {:.4}, need > 0.5", fx.gini);
    println!(
        "criterion 8 PASS: trained dense adjacency sparsity — fraction_above(1/N) = {:.4} < 0.2, Gini = {:.4} > 0.5",
        fx.fraction_above_uniform, fx.gini
    );
}

#[test]
fn criterion_9_metric_oracle() {
    let mut rng = Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + rng.usize_below(6);
        let t = 2 + rng.usize_below(10);
        let pred = Matrix::new(
            n,
            t,
            (0..n * t).map(|_| rng.uniform(-20.0, 150.0)).collect(),
        )
        .unwrap();
        let truth = Matrix::new(
            n,
            t,
            (0..n * t).map(|_| rng.uniform(-20.0, 150.0)).collect(),
        )
        .unwrap();
        let m = compute_metrics(&pred, &truth).unwrap();

        // Independent scalar-loop oracle.
        let (mut abs, mut sq, mut pct, mut pct_n) = (0.0f64, 0.0f64, 0.0f64, 0usize);
        for i in 0..n {
            for j in 0..t {
                let d = pred.get(i, j) - truth.get(i, j);
                abs += d.abs();
                sq += d * d;
                if truth.get(i, j).abs() > MAPE_FLOOR {
                    pct += (d / truth.get(i, j)).abs();
                    pct_n += 1;
                }
            }
        }
        let count = (n * t) as f64;
        let mae = abs / count;
        let rmse = (sq / count).sqrt();
        worst = worst.max((m.mae - mae).abs());
        worst = worst.max((m.rmse - rmse).abs());
        assert!((m.mae - mae).abs() < 1e-10);
        assert!((m.rmse - rmse).abs() < 1e-10);
        if pct_n > 0 {
            let mape = 100.0 * pct / pct_n as f64;
            assert!((m.mape.unwrap() - mape).abs() < 1e-10);
        } else {
            assert!(m.mape.is_none());
        }
        assert!(m.rmse >= m.mae, "RMSE {} < MAE {}", m.rmse, m.mae);
    }
    println!(
        "criterion 9 PASS: metric oracle — 100 instances match scalar loops (worst abs diff {worst:.3e}), RMSE >= MAE always"
    );
}

#[test]
fn criterion_10_training_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |path: &std::path::Path| {
        let (series, _) = synth_traffic(10, 240, 3, 0.1).unwrap();
        let data = window_and_split(&series, 12, 12, (0.7, 0.1, 0.2)).unwrap();
        let config = GsNetConfig {
            n: 10,
            s: 12,
            t: 12,
            d: 4,
            c: 4,
            c_prime: 4,
            layers: 2,
            seed: 11,
        };
        let tc = TrainConfig {
            lr: 1e-3,
            batch_size: 8,
            max_epochs: 6,
            patience: 6,
            seed: 11,
            timing: false,
            ..Default::default()
        };
        let mut model = GsNet::new(config).unwrap();
        let out = train(&mut model, &data, &tc).unwrap();
        *model.params_mut() = out.best_params.clone();
        model.to_checkpoint().save(path).unwrap();
        (out, model)
    };
    let p1 = dir.path().join("a.ckpt");
    let p2 = dir.path().join("b.ckpt");
    let (out1, m1) = run(&p1);
    let (out2, m2) = run(&p2);

    let bytes1 = std::fs::read(&p1).unwrap();
    let bytes2 = std::fs::read(&p2).unwrap();
    assert_eq!(bytes1, bytes2, "checkpoint files differ");
    assert_eq!(out1.log_csv(), out2.log_csv(), "training logs differ");
    assert!(bitwise_equal(m1.params(), m2.params()).unwrap());
    println!(
        "criterion 10 PASS: determinism — two runs produced bitwise-identical checkpoints ({} bytes) and logs",
        bytes1.len()
    );
}

// ---------------------------------------------------------------------------
// Supporting invariants beyond the numbered criteria
// ---------------------------------------------------------------------------

/// Parameter-byte accounting equals the closed-form count times eight.
#[test]
fn sweep_param_bytes_match_formula() {
    let records = sweep_fixture();
    for r in records.iter().filter(|r| r.model_tag == "gsnet") {
        let mut c = GsNetConfig::with_dims(r.n, 4);
        c.layers = 2;
        assert_eq!(r.param_bytes, (c.param_count() * 8) as u64);
    }
    println!("sweep parameter bytes equal param_count x 8 exactly");
}

/// Most of a trained coefficient matrix U can be frozen to a fixed negative
/// constant: keeping only the top 20% (or 50%) by magnitude and clamping
/// the rest to -0.5 degrades validation MAE by under 5%.
#[test]
fn clamped_coefficient_matrix_keeps_accuracy() {
    let fx = forecast_fixture();
    for keep in [0.2, 0.5] {
        let mut clamped = GsNet::new(fx.gsnet_config).unwrap();
        *clamped.params_mut() = fx.gsnet.params().clone();
        for l in 0..fx.gsnet_config.layers {
            let name = format!("layer{l}.u");
            let u = clamped.params().get(&name).clone();
            *clamped.params_mut().get_mut(&name) =
                analysis::clamp_low_magnitude(&u, keep, -0.5);
        }
        let val = evaluate(&clamped, &fx.data.val).unwrap().mae;
        let degradation = (val - fx.gsnet_val_mae) / fx.gsnet_val_mae;
        assert!(
            degradation < 0.05,
            "keeping top {:.0}% of U degraded validation MAE by {:.2}%",
            keep * 100.0,
            degradation * 100.0
        );
        println!(
            "U-clamp keep {:.0}%: validation MAE {:.4} vs {:.4} ({:+.2}%)",
            keep * 100.0,
            val,
            fx.gsnet_val_mae,
            degradation * 100.0
        );
    }
}

fn random_matrix(rng: &mut Rng, r: usize, c: usize) -> Matrix {
    Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
}
