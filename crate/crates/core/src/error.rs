use thiserror::Error;

use crate::matrix_core::SymmetryClass;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix {index} is not {expected} (deviation {deviation:e})")]
    Symmetry {
        index: usize,
        expected: SymmetryClass,
        deviation: f64,
    },

    #[error("{which} is not orthogonal (deviation {deviation:e})")]
    NotOrthogonal { which: &'static str, deviation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty region: epsilon = {epsilon} with N = {dim} (need epsilon * N <= 1)")]
    EmptyRegion { epsilon: f64, dim: usize },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("enumeration budget exceeded: {count} tuples > {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
