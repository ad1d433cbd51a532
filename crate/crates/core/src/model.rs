//! Common interface for trainable forecasters.

use crate::checkpoint::Checkpoint;
use crate::error::Result;
use crate::numkernel::{Matrix, Tape, Var};
use crate::params::{BoundParams, ParamSet};

/// Epsilon inside the layer-norm square root. Keeps an all-constant row at
/// exactly zero instead of NaN; far below the variance scale of any
/// non-degenerate activation.
pub const LAYER_NORM_EPS: f64 = 1e-8;

/// A model maps a normalized N x S input window to a normalized N x T
/// prediction on a tape, with its parameters bound as tape leaves.
pub trait Model {
    /// Model-type tag stored in checkpoints.
    fn tag(&self) -> &'static str;

    fn params(&self) -> &ParamSet;

    fn params_mut(&mut self) -> &mut ParamSet;

    /// Forecast horizon T.
    fn horizon(&self) -> usize;

    /// Integer config fields persisted in checkpoints.
    fn config_fields(&self) -> Vec<(String, i64)>;

    /// Forward a batch of input windows. Input-independent work (for the
    /// dense baseline, the adjacency itself) is shared across the batch.
    fn forward_batch<'t>(
        &self,
        tape: &'t Tape,
        bound: &BoundParams<'t>,
        xs: &[&Matrix],
    ) -> Result<Vec<Var<'t>>>;

    /// Inference convenience: forward on a throwaway tape, return values.
    fn predict_batch(&self, xs: &[&Matrix]) -> Result<Vec<Matrix>> {
        let tape = Tape::new();
        let bound = self.params().bind(&tape);
        let outs = self.forward_batch(&tape, &bound, xs)?;
        Ok(outs.into_iter().map(|v| tape.value(v)).collect())
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.predict_batch(&[x])?.pop().expect("one output"))
    }

    fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            tag: self.tag().to_string(),
            config: self.config_fields(),
            params: self.params().clone(),
        }
    }
}
