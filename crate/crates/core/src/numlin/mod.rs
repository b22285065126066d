//! Dense complex linear algebra and the metric structures on
//! `ℂⁿˣⁿ × ℂ × ℙ(ℂⁿ)`.

mod householder;
mod lu;
mod matrix;
mod metric;
mod svd;

use thiserror::Error;

pub use householder::{tangent_basis, TangentFrame};
pub use lu::{solve, Lu};
pub use matrix::{CMatrix, CVector, C64};
pub use metric::{
    eigen_residual, frobenius_norm, hermitian_inner, projective_distance, relative_residual,
    riemannian_dist, sphere_distance, triple_dist, Triple,
};
pub(crate) use metric::check_square_compatible;
pub use svd::{singular_values, smallest_singular_value, svd, Svd};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumlinError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("zero matrix has no direction")]
    ZeroMatrix,
    #[error("empty input")]
    Empty,
    #[error("matrix is singular to working precision")]
    Singular,
}
