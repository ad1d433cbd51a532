//! Taped reverse-mode differentiation over [`Matrix`] values.
//!
//! Nodes are appended in evaluation order, so index order is a topological
//! order of the graph; the backward pass is one reverse sweep that visits
//! each node exactly once. No graph rewriting or fusion happens anywhere —
//! every rule is the textbook local adjoint of its forward kernel.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Recording of one forward computation.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

struct Node {
    value: Matrix,
    grad: Matrix,
    op: Op,
}

enum Op {
    Leaf,
    Matmul(usize, usize),
    Add(usize, usize),
    Transpose(usize),
    ConcatCols(usize, usize),
    ConcatRows(usize, usize),
    SoftmaxCols(usize),
    SoftmaxRows(usize),
    Relu(usize),
    LayerNorm(usize, f64),
    MulScalar(usize, f64),
    AddScalar(usize),
    Sum(usize),
    /// sum(x ⊙ w) against a constant weight matrix.
    SumWeighted(usize, Matrix),
    /// mean |x − t| against a constant target; subgradient at zero is zero.
    MaeAgainst(usize, Matrix),
}

/// Handle to a node on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record an input. Leaves accumulate gradients like any other node;
    /// constants that need no gradient are simply leaves whose gradient is
    /// never read.
    pub fn leaf(&self, value: Matrix) -> Var<'_> {
        self.push(value, Op::Leaf)
    }

    fn push(&self, value: Matrix, op: Op) -> Var<'_> {
        let grad = Matrix::zeros(value.rows(), value.cols());
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, grad, op });
        Var {
            tape: self,
            idx: nodes.len() - 1,
        }
    }

    pub fn value(&self, v: Var<'_>) -> Matrix {
        self.nodes.borrow()[v.idx].value.clone()
    }

    pub fn grad(&self, v: Var<'_>) -> Matrix {
        self.nodes.borrow()[v.idx].grad.clone()
    }

    pub fn value_is_finite(&self, v: Var<'_>) -> bool {
        self.nodes.borrow()[v.idx].value.is_finite()
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var<'_>) -> f64 {
        let nodes = self.nodes.borrow();
        let m = &nodes[v.idx].value;
        debug_assert_eq!(m.shape(), (1, 1));
        m.get(0, 0)
    }

    fn with_value<R>(&self, idx: usize, f: impl FnOnce(&Matrix) -> R) -> R {
        f(&self.nodes.borrow()[idx].value)
    }

    /// Reverse sweep from a scalar root. Gradients accumulate into every
    /// node reachable from the root; run it once per tape.
    pub fn backward(&self, root: Var<'_>) -> Result<()> {
        let mut nodes = self.nodes.borrow_mut();
        {
            let r = &mut nodes[root.idx];
            if r.value.shape() != (1, 1) {
                return Err(Error::Evaluation(format!(
                    "backward needs a scalar root, got {}x{}",
                    r.value.rows(),
                    r.value.cols()
                )));
            }
            r.grad.set(0, 0, 1.0);
        }
        for i in (0..=root.idx).rev() {
            let (parents, rest) = nodes.split_at_mut(i);
            let node = &rest[0];
            match &node.op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    // dA += G·Bᵀ ; dB += Aᵀ·G
                    let ga = node.grad.matmul(&parents[*b].value.transpose())?;
                    let gb = parents[*a].value.transpose().matmul(&node.grad)?;
                    accumulate(&mut parents[*a].grad, &ga);
                    accumulate(&mut parents[*b].grad, &gb);
                }
                Op::Add(a, b) => {
                    let g = node.grad.clone();
                    accumulate(&mut parents[*a].grad, &g);
                    accumulate(&mut parents[*b].grad, &g);
                }
                Op::Transpose(a) => {
                    let g = node.grad.transpose();
                    accumulate(&mut parents[*a].grad, &g);
                }
                Op::ConcatCols(a, b) => {
                    let ca = parents[*a].value.cols();
                    let total = node.value.cols();
                    let ga = node.grad.slice_cols(0, ca);
                    let gb = node.grad.slice_cols(ca, total);
                    accumulate(&mut parents[*a].grad, &ga);
                    accumulate(&mut parents[*b].grad, &gb);
                }
                Op::ConcatRows(a, b) => {
                    let ra = parents[*a].value.rows();
                    let total = node.value.rows();
                    let ga = node.grad.slice_rows(0, ra);
                    let gb = node.grad.slice_rows(ra, total);
                    accumulate(&mut parents[*a].grad, &ga);
                    accumulate(&mut parents[*b].grad, &gb);
                }
                Op::SoftmaxCols(a) => {
                    let s = &node.value;
                    let g = &node.grad;
                    let mut gx = Matrix::zeros(s.rows(), s.cols());
                    for c in 0..s.cols() {
                        let mut dot = 0.0;
                        for r in 0..s.rows() {
                            dot += g.get(r, c) * s.get(r, c);
                        }
                        for r in 0..s.rows() {
                            gx.set(r, c, s.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    accumulate(&mut parents[*a].grad, &gx);
                }
                Op::SoftmaxRows(a) => {
                    let s = &node.value;
                    let g = &node.grad;
                    let mut gx = Matrix::zeros(s.rows(), s.cols());
                    for r in 0..s.rows() {
                        let mut dot = 0.0;
                        for c in 0..s.cols() {
                            dot += g.get(r, c) * s.get(r, c);
                        }
                        for c in 0..s.cols() {
                            gx.set(r, c, s.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    accumulate(&mut parents[*a].grad, &gx);
                }
                Op::Relu(a) => {
                    let x = &parents[*a].value;
                    let g = &node.grad;
                    let gx = Matrix::new(
                        x.rows(),
                        x.cols(),
                        x.data()
                            .iter()
                            .zip(g.data())
                            .map(|(&xv, &gv)| if xv > 0.0 { gv } else { 0.0 })
                            .collect(),
                    )?;
                    accumulate(&mut parents[*a].grad, &gx);
                }
                Op::LayerNorm(a, eps) => {
                    // Per row: dx = (g − mean(g) − y·mean(g⊙y)) / s with
                    // y the normalized output and s = sqrt(var + eps).
                    let x = &parents[*a].value;
                    let y = &node.value;
                    let g = &node.grad;
                    let n = x.cols() as f64;
                    let mut gx = Matrix::zeros(x.rows(), x.cols());
                    for r in 0..x.rows() {
                        let row = x.row(r);
                        let mean = row.iter().sum::<f64>() / n;
                        let var =
                            row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        let s = (var + eps).sqrt();
                        let g_mean =
                            (0..x.cols()).map(|c| g.get(r, c)).sum::<f64>() / n;
                        let gy_mean = (0..x.cols())
                            .map(|c| g.get(r, c) * y.get(r, c))
                            .sum::<f64>()
                            / n;
                        for c in 0..x.cols() {
                            let v = (g.get(r, c) - g_mean - y.get(r, c) * gy_mean) / s;
                            gx.set(r, c, v);
                        }
                    }
                    accumulate(&mut parents[*a].grad, &gx);
                }
                Op::MulScalar(a, k) => {
                    let g = node.grad.scale(*k);
                    accumulate(&mut parents[*a].grad, &g);
                }
                Op::AddScalar(a) => {
                    let g = node.grad.clone();
                    accumulate(&mut parents[*a].grad, &g);
                }
                Op::Sum(a) => {
                    let g = node.grad.get(0, 0);
                    let p = &mut parents[*a].grad;
                    for v in p.data_mut() {
                        *v += g;
                    }
                }
                Op::SumWeighted(a, w) => {
                    let g = node.grad.get(0, 0);
                    let gx = w.scale(g);
                    accumulate(&mut parents[*a].grad, &gx);
                }
                Op::MaeAgainst(a, t) => {
                    let g = node.grad.get(0, 0);
                    let x = &parents[*a].value;
                    let scale = g / (x.rows() * x.cols()) as f64;
                    let gx = Matrix::new(
                        x.rows(),
                        x.cols(),
                        x.data()
                            .iter()
                            .zip(t.data())
                            .map(|(&p, &tv)| {
                                let d = p - tv;
                                if d > 0.0 {
                                    scale
                                } else if d < 0.0 {
                                    -scale
                                } else {
                                    0.0
                                }
                            })
                            .collect(),
                    )?;
                    accumulate(&mut parents[*a].grad, &gx);
                }
            }
        }
        Ok(())
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn accumulate(dst: &mut Matrix, src: &Matrix) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

impl<'t> Var<'t> {
    fn same_tape(self, other: Var<'t>) {
        debug_assert!(std::ptr::eq(self.tape, other.tape), "vars from different tapes");
    }

    pub fn matmul(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let value = self
            .tape
            .with_value(self.idx, |a| self.tape.with_value(rhs.idx, |b| a.matmul(b)))?;
        Ok(self.tape.push(value, Op::Matmul(self.idx, rhs.idx)))
    }

    #[allow(clippy::should_implement_trait)] // fallible, unlike std::ops::Add
    pub fn add(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let value = self
            .tape
            .with_value(self.idx, |a| self.tape.with_value(rhs.idx, |b| a.add(b)))?;
        Ok(self.tape.push(value, Op::Add(self.idx, rhs.idx)))
    }

    pub fn transpose(self) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.transpose());
        self.tape.push(value, Op::Transpose(self.idx))
    }

    pub fn concat_cols(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let value = self.tape.with_value(self.idx, |a| {
            self.tape.with_value(rhs.idx, |b| a.concat_cols(b))
        })?;
        Ok(self.tape.push(value, Op::ConcatCols(self.idx, rhs.idx)))
    }

    pub fn concat_rows(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let value = self.tape.with_value(self.idx, |a| {
            self.tape.with_value(rhs.idx, |b| a.concat_rows(b))
        })?;
        Ok(self.tape.push(value, Op::ConcatRows(self.idx, rhs.idx)))
    }

    pub fn softmax_cols(self) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.softmax_cols());
        self.tape.push(value, Op::SoftmaxCols(self.idx))
    }

    pub fn softmax_rows(self) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.softmax_rows());
        self.tape.push(value, Op::SoftmaxRows(self.idx))
    }

    pub fn relu(self) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.relu());
        self.tape.push(value, Op::Relu(self.idx))
    }

    pub fn layer_norm(self, eps: f64) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.layer_norm_rows(eps));
        self.tape.push(value, Op::LayerNorm(self.idx, eps))
    }

    pub fn mul_scalar(self, k: f64) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.scale(k));
        self.tape.push(value, Op::MulScalar(self.idx, k))
    }

    pub fn add_scalar(self, k: f64) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| a.add_scalar(k));
        self.tape.push(value, Op::AddScalar(self.idx))
    }

    pub fn sum(self) -> Var<'t> {
        let value = self.tape.with_value(self.idx, |a| {
            Matrix::new(1, 1, vec![a.sum()]).expect("scalar")
        });
        self.tape.push(value, Op::Sum(self.idx))
    }

    /// Weighted sum against a constant matrix — handy as a generic scalar
    /// head for gradient checks.
    pub fn sum_weighted(self, w: &Matrix) -> Result<Var<'t>> {
        let value = self.tape.with_value(self.idx, |a| {
            if a.shape() != w.shape() {
                return Err(Error::Shape {
                    op: "sum_weighted",
                    left_rows: a.rows(),
                    left_cols: a.cols(),
                    right_rows: w.rows(),
                    right_cols: w.cols(),
                });
            }
            let s = a
                .data()
                .iter()
                .zip(w.data())
                .map(|(x, y)| x * y)
                .sum::<f64>();
            Matrix::new(1, 1, vec![s])
        })?;
        Ok(self.tape.push(value, Op::SumWeighted(self.idx, w.clone())))
    }

    /// Mean absolute error against a constant target matrix.
    pub fn mae_against(self, target: &Matrix) -> Result<Var<'t>> {
        let value = self.tape.with_value(self.idx, |a| {
            if a.shape() != target.shape() {
                return Err(Error::Shape {
                    op: "mae_against",
                    left_rows: a.rows(),
                    left_cols: a.cols(),
                    right_rows: target.rows(),
                    right_cols: target.cols(),
                });
            }
            let n = (a.rows() * a.cols()) as f64;
            let s = a
                .data()
                .iter()
                .zip(target.data())
                .map(|(x, t)| (x - t).abs())
                .sum::<f64>()
                / n;
            Matrix::new(1, 1, vec![s])
        })?;
        Ok(self
            .tape
            .push(value, Op::MaeAgainst(self.idx, target.clone())))
    }
}
