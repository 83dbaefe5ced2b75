//! Unsupervised feature selection by sparse principal component analysis.
//!
//! The selector minimizes `-Tr(WᵀStW) + γ Σ_i (‖wⁱ‖² + ε)^{p/2}` over matrices `W`
//! with orthonormal columns, where `St` is the total scatter matrix of the data.
//! Each iteration solves a symmetric eigenproblem for `W` and then refreshes a
//! diagonal reweighting matrix `G`; features are ranked by the row norms of `W`.
//!
//! The crate also carries the clustering-based evaluation used to judge a
//! selection: seeded k-means, clustering accuracy under an optimal label
//! matching, and normalized mutual information.

// Parameter checks use `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod solver;

pub use error::{Error, ErrorKind, Result};
pub use linalg::{DataMatrix, EigenPairs, SymmetricMatrix};
pub use solver::{FeatureRanking, ProjectionMatrix, SolverConfig, SolverState};
