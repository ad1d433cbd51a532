//! Reference models for accuracy and scaling comparison.
//!
//! [`DenseGcn`] is the adaptive-adjacency graph convolution: it builds the
//! full A = softmax_rows(E1·E2) and multiplies it into the node features,
//! deliberately materializing NxN work each step — the O(N²) comparator.
//! [`historical_average`] is the naive accuracy floor.

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::model::{Model, LAYER_NORM_EPS};
use crate::numkernel::{Matrix, Tape, Var};
use crate::params::{BoundParams, ParamSet};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseGcnConfig {
    pub n: usize,
    pub s: usize,
    pub t: usize,
    /// Embedding channels.
    pub d: usize,
    /// Inner dimension of the E1·E2 factorization.
    pub c: usize,
    pub layers: usize,
    pub seed: u64,
}

impl DenseGcnConfig {
    pub fn with_dims(n: usize, d: usize) -> Self {
        Self {
            n,
            s: 12,
            t: 12,
            d,
            c: d,
            layers: 3,
            seed: 0,
        }
    }

    pub fn head_width(&self) -> usize {
        4 * self.d
    }

    pub fn config_fields(&self) -> Vec<(String, i64)> {
        vec![
            ("n".into(), self.n as i64),
            ("s".into(), self.s as i64),
            ("t".into(), self.t as i64),
            ("d".into(), self.d as i64),
            ("c".into(), self.c as i64),
            ("layers".into(), self.layers as i64),
            ("seed".into(), self.seed as i64),
        ]
    }

    pub fn from_config_fields(fields: &[(String, i64)]) -> Result<Self> {
        let get = |name: &str| -> Result<i64> {
            fields
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Checkpoint(format!("missing config field '{name}'")))
        };
        Ok(Self {
            n: get("n")? as usize,
            s: get("s")? as usize,
            t: get("t")? as usize,
            d: get("d")? as usize,
            c: get("c")? as usize,
            layers: get("layers")? as usize,
            seed: get("seed")? as u64,
        })
    }
}

pub struct DenseGcn {
    pub config: DenseGcnConfig,
    params: ParamSet,
}

impl DenseGcn {
    pub fn new(config: DenseGcnConfig) -> Result<Self> {
        if config.n == 0 || config.s == 0 || config.t == 0 || config.d == 0 || config.c == 0 {
            return Err(Error::Data("config dimensions must be positive".into()));
        }
        if config.layers == 0 {
            return Err(Error::Data("layer count must be at least 1".into()));
        }
        let mut rng = Rng::seed_from_u64(config.seed);
        let (n, s, t, d, c) = (config.n, config.s, config.t, config.d, config.c);
        let h = config.head_width();
        let mut params = ParamSet::new();
        params.insert("w_in", uniform_init(&mut rng, s, d, 1.0 / (s as f64).sqrt()));
        params.insert("e1", uniform_init(&mut rng, n, c, 0.1));
        params.insert("e2", uniform_init(&mut rng, c, n, 0.1));
        for l in 0..config.layers {
            params.insert(
                format!("layer{l}.w"),
                uniform_init(&mut rng, d, d, 1.0 / (d as f64).sqrt()),
            );
        }
        params.insert(
            "head.w_skip",
            uniform_init(&mut rng, d, h, 1.0 / (d as f64).sqrt()),
        );
        params.insert(
            "head.w_out",
            uniform_init(&mut rng, h, t, 1.0 / (h as f64).sqrt()),
        );
        Ok(Self { config, params })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.tag != "dense" {
            return Err(Error::Checkpoint(format!(
                "expected a dense checkpoint, found tag '{}'",
                ck.tag
            )));
        }
        let config = DenseGcnConfig::from_config_fields(&ck.config)?;
        let mut model = Self::new(config)?;
        if ck.params.scalar_count() != model.params.scalar_count() {
            return Err(Error::Checkpoint(
                "checkpoint parameter registry does not match config".into(),
            ));
        }
        model.params = ck.params.clone();
        Ok(model)
    }

    /// The adaptive adjacency A = softmax over each row of E1·E2.
    /// Row-stochastic by construction.
    pub fn adjacency(&self) -> Result<Matrix> {
        Ok(self
            .params
            .get("e1")
            .matmul(self.params.get("e2"))?
            .softmax_rows())
    }
}

/// One dense graph convolution: relu(A·X·W). Materializes nothing beyond
/// what its inputs already are; A itself is the NxN part.
pub fn dense_gcn_layer<'t>(a: Var<'t>, x: Var<'t>, w: Var<'t>) -> Result<Var<'t>> {
    Ok(a.matmul(x)?.matmul(w)?.relu())
}

impl Model for DenseGcn {
    fn tag(&self) -> &'static str {
        "dense"
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn horizon(&self) -> usize {
        self.config.t
    }

    fn config_fields(&self) -> Vec<(String, i64)> {
        self.config.config_fields()
    }

    fn forward_batch<'t>(
        &self,
        tape: &'t Tape,
        bound: &BoundParams<'t>,
        xs: &[&Matrix],
    ) -> Result<Vec<Var<'t>>> {
        let cfg = &self.config;
        let w_in = bound.var(&self.params, "w_in");
        let w_skip = bound.var(&self.params, "head.w_skip");
        let w_out = bound.var(&self.params, "head.w_out");
        // A is input-independent; build it once per tape and share it
        // across the batch.
        let e1 = bound.var(&self.params, "e1");
        let e2 = bound.var(&self.params, "e2");
        let a = e1.matmul(e2)?.softmax_rows();

        let mut outs = Vec::with_capacity(xs.len());
        for x in xs {
            if x.shape() != (cfg.n, cfg.s) {
                return Err(Error::Shape {
                    op: "dense forward",
                    left_rows: x.rows(),
                    left_cols: x.cols(),
                    right_rows: cfg.n,
                    right_cols: cfg.s,
                });
            }
            let x_var = tape.leaf((*x).clone());
            let mut p = x_var.matmul(w_in)?;
            let mut skip: Option<Var<'t>> = None;
            for l in 0..cfg.layers {
                let w = bound.var(&self.params, &format!("layer{l}.w"));
                let conv = dense_gcn_layer(a, p, w)?;
                let h = p.add(conv)?.layer_norm(LAYER_NORM_EPS);
                if !tape.value_is_finite(h) {
                    return Err(Error::Divergence {
                        model: "dense",
                        layer: l + 1,
                    });
                }
                let term = h.matmul(w_skip)?;
                skip = Some(match skip {
                    None => term,
                    Some(acc) => acc.add(term)?,
                });
                p = h;
            }
            outs.push(skip.expect("at least one layer").relu().matmul(w_out)?);
        }
        Ok(outs)
    }
}

/// Naive predictor: every horizon step gets the mean of the node's S input
/// values. Operates on denormalized matrices.
pub fn historical_average(inputs: &Matrix, t: usize) -> Matrix {
    let n = inputs.rows();
    let s = inputs.cols() as f64;
    let mut out = Matrix::zeros(n, t);
    for node in 0..n {
        let mean = inputs.row(node).iter().sum::<f64>() / s;
        for step in 0..t {
            out.set(node, step, mean);
        }
    }
    out
}

fn uniform_init(rng: &mut Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect(),
    )
    .expect("init shape")
}
