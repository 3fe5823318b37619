//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry in {tensor} at row {row}, col {col}")]
    NonFinite {
        tensor: String,
        row: usize,
        col: usize,
    },

    #[error("polynomial kernel degree must be even to keep scores nonnegative, got {0}")]
    OddPolynomialDegree(u32),

    #[error("no exact finite feature map for {0}")]
    UnsupportedFeatureMap(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid selection plan: {0}")]
    InvalidSelection(String),

    #[error("invalid simplex combination: {0}")]
    InvalidSimplex(String),

    #[error("simplex least-squares did not converge within {max_iters} iterations")]
    SolverFailure { max_iters: usize },

    #[error("convex reduction failed on support {support:?}: {reason}")]
    CaratheodoryFailure {
        support: Vec<usize>,
        reason: String,
    },

    #[error("r={r} unsupported for L={l}, d={d}: {hint}")]
    UnsupportedRank {
        r: usize,
        l: usize,
        d: usize,
        hint: String,
    },

    #[error("sliding window width must be an even integer >= 2, got {0}")]
    InvalidWindow(usize),

    #[error("invalid LSH config: {0}")]
    InvalidLshConfig(String),

    #[error("invalid ORF config: {0}")]
    InvalidOrfConfig(String),

    #[error("{0} does not support causal instances")]
    CausalUnsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
