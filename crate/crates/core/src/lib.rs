//! Linear-complexity graph forecasting for traffic series.
//!
//! The crate bundles the forecasting model itself (stacked feature-extractor
//! and relational-compressor blocks that never materialize an NxN adjacency),
//! a dense adaptive-adjacency GCN baseline, a taped autodiff kernel with a
//! finite-difference oracle, dataset tooling for traffic series, training and
//! evaluation, theory verification (gradient bounds, rank factorization,
//! sparsity statistics), and a scaling benchmark.

// Index-heavy numeric kernels read better with explicit loop counters.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod baseline;
pub mod bench;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gsnet;
pub mod model;
pub mod numkernel;
pub mod params;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
