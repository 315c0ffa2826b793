//! Dense complex-matrix kernels shared by all precoders.
//!
//! Matrices in scope stay small (at most a few hundred rows), so everything
//! is plain row-major dense storage with straightforward loops. The module
//! provides the Gram product, Hermitian positive-definite inversion via a
//! Cholesky factorization, trace/Frobenius reductions, and the two algebraic
//! identities the precoders lean on: the matrix-inversion-lemma form of the
//! regularized pseudo-inverse and the Searle-type trace shortcut.

mod factor;
mod identities;
mod matrix;

pub use factor::{cholesky_lower, hpd_inverse};
pub use identities::{
    gram, q_by_definition, q_by_inversion_lemma, searle_trace, trace_and_frob,
};
pub use matrix::{CMatrix, CVector};

use thiserror::Error;

/// Errors raised by the dense kernels.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix dimensions must be nonzero (got {rows}x{cols})")]
    EmptyDimensions { rows: usize, cols: usize },
    #[error("dimension mismatch: {context} (got {got}, expected {expected})")]
    DimensionMismatch {
        context: &'static str,
        got: String,
        expected: String,
    },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error(
        "matrix is not positive definite: pivot {pivot} has value {value:e} \
         during Cholesky factorization"
    )]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
