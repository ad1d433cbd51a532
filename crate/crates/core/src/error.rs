//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix dimensions do not fit the requested operation.
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// Construction data does not match the declared shape.
    #[error("data length {got} does not match {rows}x{cols} = {expected}")]
    DataLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },

    /// Invalid dataset, series, or configuration contents.
    #[error("data error: {0}")]
    Data(String),

    /// A matrix exceeded the rank budget of a factorization.
    #[error("rank error: detected numerical rank {detected} exceeds requested rank {requested}")]
    Rank { detected: usize, requested: usize },

    /// A matrix could not be inverted (numerically singular).
    #[error("inversion error: {0}")]
    Singular(String),

    /// A quantity left the domain of the requested statistic or bound.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values appeared during a forward pass.
    #[error("divergence: non-finite values in layer {layer} of {model}")]
    Divergence { model: &'static str, layer: usize },

    /// A function handed to the gradient checker produced a non-finite output.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Checkpoint file rejected.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Not enough data points for a fit.
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
