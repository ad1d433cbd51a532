//! Mechanical verification of the theory: gradient-bound comparison between
//! softmax and linear-normalized adjacencies, rank-C factorization with its
//! conjugation non-uniqueness, and adjacency sparsity statistics.

pub mod factorize;
pub mod gradbounds;
pub mod sparsity;
pub mod svd;

pub use factorize::{
    conjugate_factorization, rank_factorize, RankFactorization, RANK_REL_TOL, RESIDUAL_BOUND,
};
pub use gradbounds::{
    kernel_adjacency_grad_bound, kernel_anomaly_scan, linear_norm_partial,
    max_abs_linear_partial, max_abs_softmax_partial, softmax_adjacency_grad, softmax_bound_scan,
    AnomalyScanReport, BoundScanReport,
};
pub use sparsity::{clamp_low_magnitude, sparsity_report, SparsityReport, SparsitySummary};
pub use svd::{numerical_rank, singular_values};
