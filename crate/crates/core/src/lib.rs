//! Decomposition methods for the augmented Lagrangian.
//!
//! The crate minimizes composite objectives `F(x) = f(x) + Ψ(x)` where
//! `f(x) = (r/2)‖b − Ax‖²` couples column blocks of `A` and `Ψ` is block
//! separable. Two families of methods are provided:
//!
//! * the diagonal quadratic approximation method (DQAM) together with a
//!   finite-difference and a separable-quadratic generalization;
//! * the parallel coordinate descent method (PCDM) driven by τ-nice block
//!   samplings and an expected separable overapproximation (ESO).
//!
//! Supporting modules compute the two separability measures of the quadratic
//! penalty, ESO parameters, strong convexity constants and the linear-rate
//! and complexity bounds used to compare the methods.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! front end and a thread-pool block executor live in the `augdecomp` crate.
//!
//! Block indices are 0-based throughout the API.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// NaN must fail parameter checks, hence `!(x > 0.0)` style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod blockstruct;
mod error;
pub mod eso;
pub mod generators;
pub mod linalg;
pub(crate) mod math;
pub mod problem;
pub mod sampling;
pub mod separability;
pub mod solvers;

pub use crate::error::{Error, Result};

pub use crate::blockstruct::{
    block_lipschitz_constants, residual, weighted_norm, BlockLipschitz, BlockMatrix, BlockMetric,
    BlockNorms, BlockPartition, BlockVector, BlockView,
};
pub use crate::eso::EsoParams;
pub use crate::problem::{BlockPsi, CompositeProblem, StrongConvexityInfo};
pub use crate::sampling::TauNiceSampler;
pub use crate::separability::SeparabilityReport;
pub use crate::solvers::{Algorithm, IterationRecord, IterationTrace, SolverConfig, StopRule};
