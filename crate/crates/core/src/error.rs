use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("block partitions do not match")]
    PartitionMismatch,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("matrix entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    EntryOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix has no nonzero entries")]
    ZeroMatrix,

    #[error("block {block} has an all-zero column submatrix")]
    ZeroBlock { block: usize },

    #[error("{what} is not symmetric positive definite")]
    NotPositiveDefinite { what: String },

    #[error("block {block} subproblem is singular; use a strongly convex Ψ_i or a different block metric")]
    SingularBlockSystem { block: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exhaustive enumeration of {subsets} subsets exceeds the budget of {budget}")]
    EnumerationBudget { subsets: u128, budget: u128 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("reference optimum not certified: {0}")]
    NotCertified(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("objective increased at iteration {iteration}: {previous} -> {current}")]
    Divergence {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("right-hand side b is zero")]
    ZeroRhs,

    #[error("strong convexity constant must be positive, got {0}")]
    NotStronglyConvex(f64),
}
