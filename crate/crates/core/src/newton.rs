//! Projective Newton iteration for the eigenpair problem and the
//! approximate-eigenpair certificate.
//!
//! For fixed `A`, Newton's method is applied to `F(λ, v) = (A − λI)v` with the
//! eigenvector correction constrained to the tangent space `T_v`:
//!
//! ```text
//! v̇  = A_{ζ,w}⁻¹ P_{w⊥} (A − ζI) w
//! w′ = w − v̇
//! λ′ = ζ + ⟨(A − ζI)(w − v̇), w⟩ / ⟨w, w⟩
//! ```
//!
//! `w′` is renormalised to unit length after each step.

use thiserror::Error;

use crate::condition::{self, ConditionError, SINGULARITY_TOL};
use crate::numlin::{
    check_square_compatible, projective_distance, relative_residual, CMatrix, CVector, Lu,
    NumlinError, TangentFrame, C64,
};

/// Radius constant of the approximate-eigenpair ball: any pair within
/// `C0 / μ` of a well-posed eigenpair converges quadratically from the start.
pub const C0: f64 = 0.2881;

/// Residual (relative to `‖A‖_F ‖v‖`) below which `(λ, v)` is accepted as
/// an eigenpair by [`certify_approximate`].
pub const EIGENPAIR_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError {
    #[error(transparent)]
    Numlin(#[from] NumlinError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("(λ, v) is not an eigenpair of A: relative residual {0:e}")]
    NotAnEigenpair(f64),
    #[error("the reference eigenpair is ill-posed")]
    IllPosed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewtonFailure {
    SingularRestrictedOperator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub lambda: C64,
    /// Unit norm when `applied`; the caller's vector otherwise.
    pub w: CVector,
    pub applied: bool,
    pub failure: Option<NewtonFailure>,
}

impl NewtonOutcome {
    fn unchanged(lambda: C64, w: &CVector, failure: Option<NewtonFailure>) -> Self {
        NewtonOutcome {
            lambda,
            w: w.clone(),
            applied: failure.is_none(),
            failure,
        }
    }
}

fn validate(a: &CMatrix, w: &CVector) -> Result<f64, NewtonError> {
    check_square_compatible(a, w)?;
    let frobenius = a.frobenius_norm();
    if frobenius == 0.0 {
        return Err(NumlinError::ZeroMatrix.into());
    }
    if w.is_zero() {
        return Err(NumlinError::ZeroVector.into());
    }
    Ok(frobenius)
}

/// One application of the Newton map `N_A` at `(ζ, w)`.
///
/// A singular restricted operator leaves the pair unchanged and reports
/// [`NewtonFailure::SingularRestrictedOperator`].
pub fn newton_step(a: &CMatrix, zeta: C64, w: &CVector) -> Result<NewtonOutcome, NewtonError> {
    let frobenius = validate(a, w)?;
    let n = a.n();
    if n == 1 {
        return Ok(NewtonOutcome {
            lambda: a[(0, 0)],
            w: w.normalized()?,
            applied: true,
            failure: None,
        });
    }
    let frame = TangentFrame::new(w)?;
    let x = frame.unit_v();

    // r = (A − ζI)x
    let mut r = a.matvec(x);
    for (ri, xi) in r.as_mut_slice().iter_mut().zip(x.iter()) {
        *ri -= zeta * xi;
    }
    let restricted = frame.compress(a, zeta);
    let lu = match Lu::factor(&restricted, SINGULARITY_TOL * n as f64 * frobenius) {
        Ok(lu) => lu,
        Err(_) => {
            return Ok(NewtonOutcome::unchanged(
                zeta,
                w,
                Some(NewtonFailure::SingularRestrictedOperator),
            ))
        }
    };
    let coords = lu.solve(&CVector::new(frame.to_coords(&r)));
    let vdot = frame.to_ambient(coords.as_slice());
    if !vdot.all_finite() {
        return Ok(NewtonOutcome::unchanged(
            zeta,
            w,
            Some(NewtonFailure::SingularRestrictedOperator),
        ));
    }
    let corrected = x - &vdot;

    // (A − ζI)(x − v̇), projected on x (unit)
    let mut ar = a.matvec(&corrected);
    for (ri, ci) in ar.as_mut_slice().iter_mut().zip(corrected.iter()) {
        *ri -= zeta * ci;
    }
    let lambda = zeta + ar.dot(x);
    let w_new = match corrected.normalized() {
        Ok(v) => v,
        Err(_) => {
            return Ok(NewtonOutcome::unchanged(
                zeta,
                w,
                Some(NewtonFailure::SingularRestrictedOperator),
            ))
        }
    };
    Ok(NewtonOutcome {
        lambda,
        w: w_new,
        applied: true,
        failure: None,
    })
}

/// `N_A^k(ζ, w)`; stops at the first failed step and reports it.
pub fn newton_iterate(a: &CMatrix, zeta: C64, w: &CVector, k: usize) -> Result<NewtonOutcome, NewtonError> {
    validate(a, w)?;
    let mut cur = NewtonOutcome::unchanged(zeta, w, None);
    for _ in 0..k {
        let next = newton_step(a, cur.lambda, &cur.w)?;
        if !next.applied {
            return Ok(next);
        }
        cur = next;
    }
    Ok(cur)
}

/// `√(|ζ − λ|²/‖A‖_F² + d_P(w, v)²)`: the triple distance between
/// `(A, ζ, w)` and `(A, λ, v)`.
pub fn pair_dist(frobenius: f64, zeta: C64, w: &CVector, lambda: C64, v: &CVector) -> Result<f64, NewtonError> {
    let dl = (zeta - lambda).norm() / frobenius;
    let dp = projective_distance(w, v)?;
    Ok((dl * dl + dp * dp).sqrt())
}

/// Whether `(ζ, w)` lies inside the ball of radius `c₀/μ(A, λ, v)` around
/// the well-posed eigenpair `(λ, v)`, which certifies it as an approximate
/// eigenpair with associated eigenpair `(λ, v)`.
pub fn certify_approximate(
    a: &CMatrix,
    zeta: C64,
    w: &CVector,
    lambda: C64,
    v: &CVector,
) -> Result<bool, NewtonError> {
    let frobenius = validate(a, v)?;
    validate(a, w)?;
    let res = relative_residual(a, lambda, v);
    if res > EIGENPAIR_TOL {
        return Err(NewtonError::NotAnEigenpair(res));
    }
    let report = condition::mu(a, lambda, v)?;
    if !report.well_posed {
        return Err(NewtonError::IllPosed);
    }
    Ok(pair_dist(frobenius, zeta, w, lambda, v)? < C0 / report.mu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    pub outcome: NewtonOutcome,
    /// `‖(A − λI)w‖ / (‖A‖_F ‖w‖)` at the returned pair.
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Newton steps until the relative residual drops to `target_residual` or
/// `max_steps` is exhausted. Failures are reported, never raised.
pub fn refine(
    a: &CMatrix,
    zeta: C64,
    w: &CVector,
    target_residual: f64,
    max_steps: usize,
) -> Result<RefineOutcome, NewtonError> {
    validate(a, w)?;
    let mut cur = NewtonOutcome::unchanged(zeta, w, None);
    let mut residual = relative_residual(a, cur.lambda, &cur.w);
    let mut steps = 0;
    while residual > target_residual && steps < max_steps {
        let next = newton_step(a, cur.lambda, &cur.w)?;
        if !next.applied {
            return Ok(RefineOutcome {
                outcome: next,
                residual,
                steps,
                converged: false,
            });
        }
        steps += 1;
        cur = next;
        residual = relative_residual(a, cur.lambda, &cur.w);
    }
    Ok(RefineOutcome {
        converged: residual <= target_residual,
        outcome: cur,
        residual,
        steps,
    })
}
