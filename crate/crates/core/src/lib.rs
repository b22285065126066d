//! Eigenpairs of complex matrices by certified homotopy continuation.
//!
//! A fixed, well-conditioned diagonal start matrix is deformed linearly into
//! the input matrix; each eigenpair of the start matrix is carried along the
//! segment by Newton steps whose size is dictated by the eigenpair condition
//! number. The crate also provides the condition numbers themselves, the
//! Gaussian ensembles used for average-case and smoothed experiments, and an
//! independent QR-based reference eigensolver used for validation.

pub mod condition;
pub mod homotopy;
pub mod initial;
pub mod newton;
pub mod numlin;
pub mod oracle;
pub mod random;

pub use condition::{mu, ConditionReport};
pub use homotopy::{
    all_eigenpairs, path_follow, single_eigenpair, AllEigenpairs, PathConstants, PathOptions,
    PathResult, PathStatus,
};
pub use numlin::{CMatrix, CVector, Triple, C64};
pub use oracle::{reference_eigenpairs, Eigenpair, EigenpairSet};
