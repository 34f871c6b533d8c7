//! Dense kernels: SVD, norms, proximal maps and the projections every
//! other module composes.

mod matrix;
mod norms;
mod projection;
mod prox;
mod svd;

use thiserror::Error;

pub use matrix::{DenseMatrix, SYMMETRY_TOL};
pub use norms::{norm, NormKind};
pub(crate) use norms::linf2;
pub use projection::{
    opnorm_pgamma_pt, project_support, project_t, project_t_perp, OpNormEstimate, SupportSet,
    TangentSpace, OPNORM_MAX_ITERS,
};
pub use prox::{soft_threshold, sv_threshold};
pub use svd::{singular_values, svd, SvdFactors, DEFAULT_RANK_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("basis is not orthonormal (max Gram error {error:e})")]
    NotOrthonormal { error: f64 },
    #[error("index ({i}, {j}) out of range for n = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("invalid {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}
