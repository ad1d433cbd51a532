//! Dense matrix arithmetic, taped reverse-mode differentiation, gradient
//! checking, and the Adam optimizer.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod probe;
pub mod tape;

pub use adam::{adam_step, Adam, AdamState};
pub use gradcheck::grad_check;
pub use matrix::{approx_eq, Matrix};
pub use tape::{Tape, Var};
