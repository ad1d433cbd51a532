//! Central finite-difference oracle for backward rules.

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, Tape, Var};

/// Compare the taped gradient of a scalar-valued function against central
/// finite differences at every entry of `x`.
///
/// Returns the maximum of |analytic − central| / max(1, |central|).
pub fn grad_check<F>(f: F, x: &Matrix, eps: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::Evaluation(format!(
            "grad_check eps must be in (0, 1e-2], got {eps}"
        )));
    }

    let analytic = {
        let tape = Tape::new();
        let v = tape.leaf(x.clone());
        let out = f(&tape, v)?;
        if !tape.value_is_finite(out) {
            return Err(Error::Evaluation("function value is not finite".into()));
        }
        tape.backward(out)?;
        tape.grad(v)
    };

    let eval = |m: &Matrix| -> Result<f64> {
        let tape = Tape::new();
        let v = tape.leaf(m.clone());
        let out = f(&tape, v)?;
        let s = tape.scalar(out);
        if !s.is_finite() {
            return Err(Error::Evaluation("function value is not finite".into()));
        }
        Ok(s)
    };

    let mut max_rel = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe.get(i, j);
            probe.set(i, j, orig + eps);
            let plus = eval(&probe)?;
            probe.set(i, j, orig - eps);
            let minus = eval(&probe)?;
            probe.set(i, j, orig);
            let central = (plus - minus) / (2.0 * eps);
            let rel = (analytic.get(i, j) - central).abs() / central.abs().max(1.0);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random(rng: &mut Rng, r: usize, c: usize) -> Matrix {
        Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_function_has_zero_error() {
        // Dyadic entries and a power-of-two eps keep the finite differences
        // exact, so the gradient of sum() checks out with error exactly 0.
        let x = Matrix::new(2, 3, vec![3.0, -5.0, 1.25, 0.5, 0.0, -2.0]).unwrap();
        let err = grad_check(|_t, v| Ok(v.sum()), &x, 0.0009765625).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn quadratic_form_passes() {
        let mut rng = Rng::seed_from_u64(1);
        let x = random(&mut rng, 3, 3);
        let err = grad_check(
            |_t, v| {
                let xt = v.transpose();
                Ok(v.matmul(xt)?.sum())
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn rejects_bad_eps() {
        let x = Matrix::zeros(1, 1);
        assert!(grad_check(|_t, v| Ok(v.sum()), &x, 0.0).is_err());
        assert!(grad_check(|_t, v| Ok(v.sum()), &x, 0.5).is_err());
    }

    #[test]
    fn every_op_passes_grad_check_over_seeds() {
        // Ops in isolation must stay under 1e-5 relative error at eps 1e-5.
        for seed in 0..20u64 {
            let mut rng = Rng::seed_from_u64(seed);
            let x = random(&mut rng, 4, 3);
            let w = random(&mut rng, 4, 3);
            let m = random(&mut rng, 3, 5);
            let w2 = random(&mut rng, 4, 5);
            let cases: Vec<(&str, f64)> = vec![
                (
                    "matmul",
                    grad_check(
                        |t, v| v.matmul(t.leaf(m.clone()))?.sum_weighted(&w2),
                        &x,
                        1e-5,
                    )
                    .unwrap(),
                ),
                (
                    "softmax_cols",
                    grad_check(|_t, v| v.softmax_cols().sum_weighted(&w), &x, 1e-5).unwrap(),
                ),
                (
                    "softmax_rows",
                    grad_check(|_t, v| v.softmax_rows().sum_weighted(&w), &x, 1e-5).unwrap(),
                ),
                (
                    "layer_norm",
                    grad_check(|_t, v| v.layer_norm(1e-8).sum_weighted(&w), &x, 1e-5).unwrap(),
                ),
                (
                    "relu",
                    grad_check(|_t, v| v.relu().sum_weighted(&w), &x, 1e-5).unwrap(),
                ),
                (
                    "concat_cols",
                    grad_check(
                        |t, v| {
                            let other = t.leaf(w2.clone());
                            let cat = v.concat_cols(other)?;
                            let wc = Matrix::filled(4, 8, 0.5);
                            cat.sum_weighted(&wc)
                        },
                        &x,
                        1e-5,
                    )
                    .unwrap(),
                ),
                (
                    "transpose",
                    grad_check(
                        |_t, v| v.transpose().sum_weighted(&x.transpose()),
                        &x,
                        1e-5,
                    )
                    .unwrap(),
                ),
                (
                    "scalar_chain",
                    grad_check(
                        |_t, v| Ok(v.mul_scalar(2.5).add_scalar(-0.3).sum()),
                        &x,
                        1e-5,
                    )
                    .unwrap(),
                ),
                (
                    "mae",
                    grad_check(|_t, v| v.mae_against(&w), &x, 1e-5).unwrap(),
                ),
            ];
            for (name, err) in cases {
                assert!(err < 1e-5, "seed {seed}: op {name} error {err}");
            }
        }
    }
}
