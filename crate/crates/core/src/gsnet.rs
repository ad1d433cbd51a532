//! The forecasting model: stacked feature-extractor and relational-compressor
//! blocks over node and input embeddings, with skip aggregation into a
//! two-layer head. Nothing here ever materializes an NxN matrix; node
//! interaction happens in a C-dimensional compressed space, so time and
//! parameter count are linear in N.
//!
//! Shapes, with N nodes, d embedding channels, C compressed slots and C'
//! coefficient rows:
//!
//! ```text
//! P = X·W_in                       N x d      input embedding
//! Z = P ‖ Q                        N x 2d     block input
//! feature extractor:
//!   V1 = (Q·W1 + B1)ᵀ              C x N      compression map
//!   H  = V1·Z                      C x 2d
//!   O  = LN(Z + V2·softmax_cols(H))            V2 = Q·W2 + B2, N x C
//! relational compressor:
//!   V3 = (Z·W3 + B3)ᵀ              C x N
//!   H  = V3·Z                      C x 2d
//!   H' = H ‖rows U                 (C+C') x 2d
//!   H''= K·H'                      (C+C') x 2d   low-dimensional adjacency
//!   O  = LN(Z + V4·softmax_cols(H''))           V4 = Z·W4 + B4, N x (C+C')
//! per layer: O_l = O_FE ‖ O_RC (N x 4d); skip += O_l·W_skip; P ← O_l·W_upd
//! head: prediction = relu(skip)·W_out          N x T
//! ```

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::model::{Model, LAYER_NORM_EPS};
use crate::numkernel::{Matrix, Tape, Var};
use crate::params::{BoundParams, ParamSet};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GsNetConfig {
    /// Node count N.
    pub n: usize,
    /// Input window length S.
    pub s: usize,
    /// Forecast horizon T.
    pub t: usize,
    /// Embedding channels d.
    pub d: usize,
    /// Compressed dimension C.
    pub c: usize,
    /// Coefficient rows C'.
    pub c_prime: usize,
    /// Stacked layer count L.
    pub layers: usize,
    pub seed: u64,
}

impl GsNetConfig {
    /// Defaults mirror the reference experimental setup: S = T = 12, three
    /// layers, and d = C = C'.
    pub fn with_dims(n: usize, d: usize) -> Self {
        Self {
            n,
            s: 12,
            t: 12,
            d,
            c: d,
            c_prime: d,
            layers: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s == 0 || self.t == 0 || self.d == 0 || self.c == 0 {
            return Err(Error::Data("config dimensions must be positive".into()));
        }
        if self.layers == 0 {
            return Err(Error::Data("layer count must be at least 1".into()));
        }
        Ok(())
    }

    /// Head width between skip aggregation and the output projection.
    pub fn head_width(&self) -> usize {
        4 * self.d
    }

    /// Exact closed-form parameter count of the registry. Linear in N with
    /// slope d + L·(4C + C').
    pub fn param_count(&self) -> usize {
        let (n, s, t, d, c, cp, l) = (
            self.n,
            self.s,
            self.t,
            self.d,
            self.c,
            self.c_prime,
            self.layers,
        );
        let h = self.head_width();
        let per_layer =
            n * (4 * c + cp) + 6 * d * c + 4 * d * cp + (c + cp) * (c + cp) + 4 * d * d;
        s * d + n * d + l * per_layer + 4 * d * h + h * t
    }

    pub fn config_fields(&self) -> Vec<(String, i64)> {
        vec![
            ("n".into(), self.n as i64),
            ("s".into(), self.s as i64),
            ("t".into(), self.t as i64),
            ("d".into(), self.d as i64),
            ("c".into(), self.c as i64),
            ("c_prime".into(), self.c_prime as i64),
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
            c_prime: get("c_prime")? as usize,
            layers: get("layers")? as usize,
            seed: get("seed")? as u64,
        })
    }
}

/// Tape handles for one layer's parameters.
struct LayerVars<'t> {
    w1: Var<'t>,
    b1: Var<'t>,
    w2: Var<'t>,
    b2: Var<'t>,
    w3: Var<'t>,
    b3: Var<'t>,
    w4: Var<'t>,
    b4: Var<'t>,
    u: Var<'t>,
    k: Var<'t>,
    w_upd: Var<'t>,
}

pub struct GsNet {
    pub config: GsNetConfig,
    params: ParamSet,
}

impl GsNet {
    pub fn new(config: GsNetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::seed_from_u64(config.seed);
        let (n, s, t, d, c, cp) = (
            config.n,
            config.s,
            config.t,
            config.d,
            config.c,
            config.c_prime,
        );
        let h = config.head_width();
        let mut params = ParamSet::new();

        // Weight matrices: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
        // Embedding-like parameters Q, U, K: uniform(-0.1, 0.1).
        params.insert("w_in", init_fan_in(&mut rng, s, d, s));
        params.insert("q", init_embed(&mut rng, n, d));
        for l in 0..config.layers {
            params.insert(format!("layer{l}.w1"), init_fan_in(&mut rng, d, c, d));
            params.insert(format!("layer{l}.b1"), init_fan_in(&mut rng, n, c, d));
            params.insert(format!("layer{l}.w2"), init_fan_in(&mut rng, d, c, d));
            params.insert(format!("layer{l}.b2"), init_fan_in(&mut rng, n, c, d));
            params.insert(format!("layer{l}.w3"), init_fan_in(&mut rng, 2 * d, c, 2 * d));
            params.insert(format!("layer{l}.b3"), init_fan_in(&mut rng, n, c, 2 * d));
            params.insert(
                format!("layer{l}.w4"),
                init_fan_in(&mut rng, 2 * d, c + cp, 2 * d),
            );
            params.insert(
                format!("layer{l}.b4"),
                init_fan_in(&mut rng, n, c + cp, 2 * d),
            );
            params.insert(format!("layer{l}.u"), init_embed(&mut rng, cp, 2 * d));
            params.insert(format!("layer{l}.k"), init_embed(&mut rng, c + cp, c + cp));
            params.insert(
                format!("layer{l}.w_upd"),
                init_fan_in(&mut rng, 4 * d, d, 4 * d),
            );
        }
        params.insert("head.w_skip", init_fan_in(&mut rng, 4 * d, h, 4 * d));
        params.insert("head.w_out", init_fan_in(&mut rng, h, t, h));

        debug_assert_eq!(params.scalar_count(), config.param_count());
        Ok(Self { config, params })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.tag != "gsnet" {
            return Err(Error::Checkpoint(format!(
                "expected a gsnet checkpoint, found tag '{}'",
                ck.tag
            )));
        }
        let config = GsNetConfig::from_config_fields(&ck.config)?;
        let mut model = Self::new(config)?;
        if ck.params.scalar_count() != model.params.scalar_count() {
            return Err(Error::Checkpoint(
                "checkpoint parameter registry does not match config".into(),
            ));
        }
        model.params = ck.params.clone();
        Ok(model)
    }

    fn layer_vars<'t>(&self, bound: &BoundParams<'t>, l: usize) -> LayerVars<'t> {
        let v = |suffix: &str| bound.var(&self.params, &format!("layer{l}.{suffix}"));
        LayerVars {
            w1: v("w1"),
            b1: v("b1"),
            w2: v("w2"),
            b2: v("b2"),
            w3: v("w3"),
            b3: v("b3"),
            w4: v("w4"),
            b4: v("b4"),
            u: v("u"),
            k: v("k"),
            w_upd: v("w_upd"),
        }
    }

    /// Project the raw window onto the embedding channels: P = X·W_in.
    pub fn input_embed<'t>(x: Var<'t>, w_in: Var<'t>) -> Result<Var<'t>> {
        x.matmul(w_in)
    }

    /// Compress-activate-decompress block driven by the node embedding.
    pub fn feature_extractor<'t>(
        p: Var<'t>,
        q: Var<'t>,
        w1: Var<'t>,
        b1: Var<'t>,
        w2: Var<'t>,
        b2: Var<'t>,
    ) -> Result<Var<'t>> {
        let z = p.concat_cols(q)?;
        let v1 = q.matmul(w1)?.add(b1)?.transpose();
        let h = v1.matmul(z)?;
        let v2 = q.matmul(w2)?.add(b2)?;
        let o_pre = v2.matmul(h.softmax_cols())?;
        Ok(z.add(o_pre)?.layer_norm(LAYER_NORM_EPS))
    }

    /// Block that fuses node features through the low-dimensional adjacency
    /// K after appending the coefficient rows U.
    #[allow(clippy::too_many_arguments)]
    pub fn relational_compressor<'t>(
        p: Var<'t>,
        q: Var<'t>,
        w3: Var<'t>,
        b3: Var<'t>,
        w4: Var<'t>,
        b4: Var<'t>,
        u: Var<'t>,
        k: Var<'t>,
    ) -> Result<Var<'t>> {
        let z = p.concat_cols(q)?;
        let v3 = z.matmul(w3)?.add(b3)?.transpose();
        let h = v3.matmul(z)?;
        let h_cat = h.concat_rows(u)?;
        let h_mix = k.matmul(h_cat)?;
        let v4 = z.matmul(w4)?.add(b4)?;
        let o_pre = v4.matmul(h_mix.softmax_cols())?;
        Ok(z.add(o_pre)?.layer_norm(LAYER_NORM_EPS))
    }

    fn forward_one<'t>(
        &self,
        tape: &'t Tape,
        bound: &BoundParams<'t>,
        x: &Matrix,
    ) -> Result<Var<'t>> {
        let cfg = &self.config;
        if x.shape() != (cfg.n, cfg.s) {
            return Err(Error::Shape {
                op: "gsnet forward",
                left_rows: x.rows(),
                left_cols: x.cols(),
                right_rows: cfg.n,
                right_cols: cfg.s,
            });
        }
        let q = bound.var(&self.params, "q");
        let w_in = bound.var(&self.params, "w_in");
        let w_skip = bound.var(&self.params, "head.w_skip");
        let w_out = bound.var(&self.params, "head.w_out");

        let x_var = tape.leaf(x.clone());
        let mut p = Self::input_embed(x_var, w_in)?;
        let mut skip: Option<Var<'t>> = None;
        for l in 0..cfg.layers {
            let lv = self.layer_vars(bound, l);
            let o_fe = Self::feature_extractor(p, q, lv.w1, lv.b1, lv.w2, lv.b2)?;
            let o_rc =
                Self::relational_compressor(p, q, lv.w3, lv.b3, lv.w4, lv.b4, lv.u, lv.k)?;
            if !tape.value_is_finite(o_fe) || !tape.value_is_finite(o_rc) {
                return Err(Error::Divergence {
                    model: "gsnet",
                    layer: l + 1,
                });
            }
            let o = o_fe.concat_cols(o_rc)?;
            let term = o.matmul(w_skip)?;
            skip = Some(match skip {
                None => term,
                Some(acc) => acc.add(term)?,
            });
            p = o.matmul(lv.w_upd)?;
        }
        skip.expect("at least one layer").relu().matmul(w_out)
    }
}

impl Model for GsNet {
    fn tag(&self) -> &'static str {
        "gsnet"
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
        xs.iter().map(|x| self.forward_one(tape, bound, x)).collect()
    }
}

fn init_fan_in(rng: &mut Rng, rows: usize, cols: usize, fan_in: usize) -> Matrix {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect(),
    )
    .expect("init shape")
}

fn init_embed(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.uniform(-0.1, 0.1)).collect(),
    )
    .expect("init shape")
}
