//! Wall-time scaling of the model, kept in its own test binary so the
//! measurement never shares the machine with other tests. The assertion is
//! deliberately loose: constant factors and allocator behavior add noise
//! that the FLOP-based exponent (see the acceptance suite) does not have.

use std::time::Instant;

use gsnet_core::data::{synth_traffic, window_and_split};
use gsnet_core::gsnet::{GsNet, GsNetConfig};
use gsnet_core::model::Model;
use gsnet_core::numkernel::{Adam, Matrix, Tape};
use gsnet_core::trainer::batch_loss;

/// Median-free timing: repetitions interleave round-robin across node
/// counts so slowly varying background load hits every N equally, and the
/// minimum per cell approximates the quiet run.
#[test]
fn wall_time_exponent_is_roughly_linear() {
    let ns = [512usize, 1024, 2048];
    let steps = 4;
    let batch = 4;
    let reps = 5;

    let mut setups = Vec::new();
    for &n in &ns {
        let l = (12 + 12 + steps * batch).max(48);
        let (series, _) = synth_traffic(n, l, 7 + n as u64, 0.02).unwrap();
        let data = window_and_split(&series, 12, 12, (1.0, 0.0, 0.0)).unwrap();
        let mut config = GsNetConfig::with_dims(n, 4);
        config.layers = 2;
        let model = GsNet::new(config).unwrap();
        setups.push((n, data, model));
    }

    let mut best = vec![f64::INFINITY; ns.len()];
    for _ in 0..reps {
        for (slot, (_, data, model)) in setups.iter_mut().enumerate() {
            let mut optimizer = {
                let values: Vec<&Matrix> = model.params().values().iter().collect();
                Adam::new(1e-4, &values)
            };
            let start = Instant::now();
            for step in 0..steps {
                let lo = step * batch;
                let inputs: Vec<&Matrix> =
                    (lo..lo + batch).map(|i| &data.train.inputs[i]).collect();
                let targets: Vec<&Matrix> =
                    (lo..lo + batch).map(|i| &data.train.targets[i]).collect();
                let tape = Tape::new();
                let bound = model.params().bind(&tape);
                let loss =
                    batch_loss(&tape, model, &bound, &inputs, &targets, data.train.stats)
                        .unwrap();
                tape.backward(loss).unwrap();
                let grads = bound.grads(&tape);
                let mut values = model.params_mut().values_mut();
                optimizer.step(&mut values, &grads).unwrap();
            }
            best[slot] = best[slot].min(start.elapsed().as_secs_f64());
        }
    }

    // Least-squares slope of log(time) on log(N).
    let points: Vec<(f64, f64)> = ns
        .iter()
        .zip(&best)
        .map(|(&n, &t)| ((n as f64).ln(), t.ln()))
        .collect();
    let len = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let exponent = (len * sxy - sx * sy) / (len * sxx - sx * sx);

    assert!(
        (0.8..=1.5).contains(&exponent),
        "wall-time exponent {exponent:.3} outside [0.8, 1.5]; times {best:?}"
    );
    println!(
        "wall-time exponent {exponent:.3} over N = {ns:?} (times {best:?}, loose range [0.8, 1.5])"
    );
}
