use thiserror::Error;

/// Errors reported by the decomposition pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has no columns")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("appended column {column} is numerically dependent on the absorbed columns")]
    RankDeficientUpdate { column: usize },

    #[error("matrix is numerically rank deficient ({context})")]
    RankDeficient { context: String },

    #[error("row sparsity {zeta} must divide the embedding dimension {k} and not exceed it")]
    InvalidSparsity { k: usize, zeta: usize },

    #[error("basis is not orthonormal: ||Q^T Q - I||_F = {defect:e}")]
    NotOrthonormal { defect: f64 },

    #[error("rejection sampler did not finish within {rounds} block rounds")]
    MaxRoundsExceeded { rounds: usize },

    #[error("sampling weights are all zero or negative")]
    DegenerateDistribution,

    #[error("enumeration over {count} subsets exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("kernel matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}
