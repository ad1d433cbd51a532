//! Ordered registry of named trainable matrices.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, Tape, Var};

/// Named parameters in a fixed insertion order. The order defines how
/// gradients are gathered, how the optimizer walks the set, and how
/// checkpoints are laid out, so it must be identical across runs.
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Matrix>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter {name}"
        );
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> &Matrix {
        &self.values[self.index[name]]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Matrix {
        &mut self.values[self.index[name]]
    }

    pub fn index_of(&self, name: &str) -> usize {
        self.index[name]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names.iter().map(|n| n.as_str()).zip(&self.values)
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn values_mut(&mut self) -> Vec<&mut Matrix> {
        self.values.iter_mut().collect()
    }

    /// Total scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|m| m.rows() * m.cols()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|m| m.is_finite())
    }

    /// Push every parameter onto a tape as a leaf, in registry order.
    pub fn bind<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        BoundParams {
            vars: self.values.iter().map(|m| tape.leaf(m.clone())).collect(),
        }
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

impl Clone for ParamSet {
    fn clone(&self) -> Self {
        Self {
            names: self.names.clone(),
            values: self.values.clone(),
            index: self.index.clone(),
        }
    }
}

/// Tape handles for one [`ParamSet`], aligned with its registry order.
pub struct BoundParams<'t> {
    vars: Vec<Var<'t>>,
}

impl<'t> BoundParams<'t> {
    /// Assemble from explicit vars in registry order — lets a caller swap a
    /// single parameter for a probed variable (finite-difference checks).
    pub fn from_vars(vars: Vec<Var<'t>>) -> Self {
        Self { vars }
    }

    pub fn var(&self, params: &ParamSet, name: &str) -> Var<'t> {
        self.vars[params.index_of(name)]
    }

    /// Gradients for every parameter, in registry order.
    pub fn grads(&self, tape: &Tape) -> Vec<Matrix> {
        self.vars.iter().map(|v| tape.grad(*v)).collect()
    }
}

/// Bitwise-equality check used by determinism tests.
pub fn bitwise_equal(a: &ParamSet, b: &ParamSet) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Data("parameter sets differ in length".into()));
    }
    for ((na, ma), (nb, mb)) in a.iter().zip(b.iter()) {
        if na != nb || ma.shape() != mb.shape() {
            return Ok(false);
        }
        for (x, y) in ma.data().iter().zip(mb.data()) {
            if x.to_bits() != y.to_bits() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
