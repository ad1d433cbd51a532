//! Adam with bias correction, operating on [`Matrix`] parameters.

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// First and second moment estimates for one parameter.
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
}

impl AdamState {
    pub fn zeros_like(param: &Matrix) -> Self {
        Self {
            m: Matrix::zeros(param.rows(), param.cols()),
            v: Matrix::zeros(param.rows(), param.cols()),
        }
    }
}

/// One Adam update. `t` is the 1-based step count used for bias correction.
pub fn adam_step(
    param: &mut Matrix,
    grad: &Matrix,
    state: &mut AdamState,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
    t: u64,
) -> Result<()> {
    if param.shape() != grad.shape() {
        return Err(Error::Shape {
            op: "adam_step",
            left_rows: param.rows(),
            left_cols: param.cols(),
            right_rows: grad.rows(),
            right_cols: grad.cols(),
        });
    }
    debug_assert!(t >= 1);
    let (b1, b2) = betas;
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    let p = param.data_mut();
    for i in 0..p.len() {
        let g = grad.data()[i];
        let m = b1 * state.m.data()[i] + (1.0 - b1) * g;
        let v = b2 * state.v.data()[i] + (1.0 - b2) * g * g;
        state.m.data_mut()[i] = m;
        state.v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Optimizer that owns moment state for a list of parameters updated in a
/// fixed order each step.
pub struct Adam {
    pub lr: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    t: u64,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(lr: f64, params: &[&Matrix]) -> Self {
        Self {
            lr,
            betas: (0.9, 0.999),
            eps: 1e-8,
            t: 0,
            states: params.iter().map(|p| AdamState::zeros_like(p)).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) -> Result<()> {
        assert_eq!(params.len(), self.states.len());
        assert_eq!(grads.len(), self.states.len());
        self.t += 1;
        for ((param, grad), state) in params.iter_mut().zip(grads).zip(&mut self.states) {
            adam_step(param, grad, state, self.lr, self.betas, self.eps, self.t)?;
        }
        Ok(())
    }
}
