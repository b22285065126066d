//! Norms, inner products and the distances on matrix × eigenvalue ×
//! projective space used throughout the crate.

use std::f64::consts::{FRAC_PI_2, PI};

use super::matrix::{CMatrix, CVector, C64};
use super::NumlinError;

/// A matrix with an eigenvalue/eigenvector candidate `(A, λ, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub matrix: CMatrix,
    pub lambda: C64,
    pub v: CVector,
}

impl Triple {
    pub fn new(matrix: CMatrix, lambda: C64, v: CVector) -> Result<Self, NumlinError> {
        check_square_compatible(&matrix, &v)?;
        if v.is_zero() {
            return Err(NumlinError::ZeroVector);
        }
        Ok(Triple { matrix, lambda, v })
    }

    /// `‖(A − λI)v‖ / (‖A‖_F ‖v‖)`; membership in the solution variety means
    /// this is below a tolerance.
    pub fn residual(&self) -> f64 {
        relative_residual(&self.matrix, self.lambda, &self.v)
    }
}

pub(crate) fn check_square_compatible(a: &CMatrix, v: &CVector) -> Result<(), NumlinError> {
    if !a.is_square() {
        return Err(NumlinError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.n() != v.len() {
        return Err(NumlinError::DimensionMismatch {
            expected: a.n(),
            found: v.len(),
        });
    }
    if v.is_empty() {
        return Err(NumlinError::Empty);
    }
    Ok(())
}

/// `‖(A − λI)v‖`, no normalisation.
pub fn eigen_residual(a: &CMatrix, lambda: C64, v: &CVector) -> f64 {
    let mut r = a.matvec(v);
    for (ri, vi) in r.as_mut_slice().iter_mut().zip(v.iter()) {
        *ri -= lambda * vi;
    }
    r.norm()
}

/// `‖(A − λI)v‖ / (‖A‖_F ‖v‖)`; infinite for a zero matrix or vector.
pub fn relative_residual(a: &CMatrix, lambda: C64, v: &CVector) -> f64 {
    let denom = a.frobenius_norm() * v.norm();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    eigen_residual(a, lambda, v) / denom
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.frobenius_norm()
}

/// `⟨u, v⟩ = Σ u_i · conj(v_i)`.
pub fn hermitian_inner(u: &CVector, v: &CVector) -> Result<C64, NumlinError> {
    if u.len() != v.len() {
        return Err(NumlinError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(u.dot(v))
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Fubini–Study distance between the complex lines through `v` and `w`,
/// in `[0, π/2]`.
pub fn projective_distance(v: &CVector, w: &CVector) -> Result<f64, NumlinError> {
    let ip = hermitian_inner(v, w)?;
    let (nv, nw) = (v.norm(), w.norm());
    if nv == 0.0 || nw == 0.0 {
        return Err(NumlinError::ZeroVector);
    }
    let cos = ip.norm() / nv / nw;
    // acos is badly conditioned near 1; use the sine of the angle there.
    if cos > 0.9 {
        let sin = projective_sine(v, w, ip, nv, nw);
        return Ok(sin.clamp(0.0, 1.0).asin());
    }
    Ok(clamped_acos(cos).min(FRAC_PI_2))
}

/// `‖w/‖w‖ − proj_v(w/‖w‖)‖`, the sine of the angle between the lines.
fn projective_sine(v: &CVector, w: &CVector, ip: C64, nv: f64, nw: f64) -> f64 {
    // w − (⟨w,v⟩/‖v‖²)·v
    let coef = ip.conj() / (nv * nv);
    let perp: f64 = w
        .iter()
        .zip(v.iter())
        .map(|(wi, vi)| (wi - coef * vi).norm_sqr())
        .sum::<f64>()
        .sqrt();
    perp / nw
}

/// Angle between the rays `ℝ₊A` and `ℝ₊B` on the Frobenius sphere, in `[0, π]`.
pub fn sphere_distance(a: &CMatrix, b: &CMatrix) -> Result<f64, NumlinError> {
    check_same_shape(a, b)?;
    let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());
    if na == 0.0 || nb == 0.0 {
        return Err(NumlinError::ZeroMatrix);
    }
    let cos = a.frobenius_inner(b).re / na / nb;
    // Near ±1 acos loses half the digits; recover the angle from the chord.
    if cos > 0.9 {
        let chord = normalized_chord(a, b, na, nb);
        return Ok(2.0 * (chord / 2.0).clamp(0.0, 1.0).asin());
    }
    if cos < -0.9 {
        let chord = normalized_chord(a, &b.scale_real(-1.0), na, nb);
        return Ok(PI - 2.0 * (chord / 2.0).clamp(0.0, 1.0).asin());
    }
    Ok(clamped_acos(cos))
}

fn check_same_shape(a: &CMatrix, b: &CMatrix) -> Result<(), NumlinError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(NumlinError::DimensionMismatch {
            expected: a.rows() * a.cols(),
            found: b.rows() * b.cols(),
        });
    }
    Ok(())
}

/// `‖A/‖A‖_F − B/‖B‖_F‖_F`.
fn normalized_chord(a: &CMatrix, b: &CMatrix, na: f64, nb: f64) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x / na - y / nb).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

struct DistTerms {
    chord: f64,
    lambda: f64,
    proj: f64,
}

fn dist_terms(t1: &Triple, t2: &Triple) -> Result<DistTerms, NumlinError> {
    check_same_shape(&t1.matrix, &t2.matrix)?;
    let (n1, n2) = (t1.matrix.frobenius_norm(), t2.matrix.frobenius_norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(NumlinError::ZeroMatrix);
    }
    Ok(DistTerms {
        chord: normalized_chord(&t1.matrix, &t2.matrix, n1, n2),
        lambda: (t1.lambda / n1 - t2.lambda / n2).norm(),
        proj: projective_distance(&t1.v, &t2.v)?,
    })
}

/// The scale-normalised distance between two triples:
/// `√(‖A/‖A‖ − A′/‖A′‖‖² + |λ/‖A‖ − λ′/‖A′‖|² + d_P(v,v′)²)`.
pub fn triple_dist(t1: &Triple, t2: &Triple) -> Result<f64, NumlinError> {
    let d = dist_terms(t1, t2)?;
    Ok((d.chord * d.chord + d.lambda * d.lambda + d.proj * d.proj).sqrt())
}

/// Like [`triple_dist`] with the matrix chord replaced by the sphere angle;
/// never smaller than `triple_dist`.
pub fn riemannian_dist(t1: &Triple, t2: &Triple) -> Result<f64, NumlinError> {
    let d = dist_terms(t1, t2)?;
    // angle = 2·asin(chord/2) on the unit sphere
    let angle = 2.0 * (d.chord / 2.0).clamp(0.0, 1.0).asin();
    Ok((angle * angle + d.lambda * d.lambda + d.proj * d.proj).sqrt())
}
