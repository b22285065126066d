//! Condition numbers of eigenpairs.
//!
//! The central quantity is `μ(A, λ, v) = ‖A‖_F · ‖A_{λ,v}⁻¹‖`, where
//! `A_{λ,v} = P_{v⊥} (A − λI)|_{T_v}` is the restriction of `A − λI` to the
//! tangent space of projective space at `v`. It bounds the sensitivity of
//! both the eigenvalue and the eigenvector and drives the step size of the
//! continuation. `μ` is accepted at any triple, on the solution variety or
//! not; non-invertible restrictions give `μ = ∞`.

use thiserror::Error;

use crate::numlin::{
    check_square_compatible, smallest_singular_value, svd, CMatrix, CVector, NumlinError,
    TangentFrame, C64,
};
use crate::oracle::EigenpairSet;

/// Relative singularity threshold: `σ_min ≤ SINGULARITY_TOL · n · ‖A‖_F`
/// makes a triple ill-posed.
pub const SINGULARITY_TOL: f64 = 1e-14;

/// Residual threshold (relative to `‖A‖_F`) for accepting `λ` as an
/// eigenvalue when computing a left eigenvector.
pub const LEFT_EIGENVECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error(transparent)]
    Numlin(#[from] NumlinError),
    #[error("condition numbers need dimension at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("not an eigenvalue: smallest singular value of A - λI is {sigma_min:e} (relative)")]
    NotAnEigenvalue { sigma_min: f64 },
    #[error("left and right eigenvectors are orthogonal; the eigenvalue is not simple")]
    MultipleEigenvalue,
    #[error("the triple is ill-posed (restricted operator is singular)")]
    IllPosed,
    #[error("eigenpair set has {found} entries, expected {expected}")]
    IncompleteSet { expected: usize, found: usize },
}

/// Outcome of evaluating `μ` at a triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionReport {
    /// `frobenius / sigma_min`, or `+∞` when ill-posed.
    pub mu: f64,
    /// Smallest singular value of the restricted operator (unit `v`).
    pub sigma_min: f64,
    pub well_posed: bool,
    pub frobenius: f64,
}

fn validate(a: &CMatrix, v: &CVector) -> Result<(), ConditionError> {
    check_square_compatible(a, v)?;
    if a.n() < 2 {
        return Err(ConditionError::DimensionTooSmall(a.n()));
    }
    if v.is_zero() {
        return Err(NumlinError::ZeroVector.into());
    }
    Ok(())
}

/// Matrix of `A_{λ,v}` in the orthonormal tangent basis `B` of `v`:
/// `Bᴴ(A − λI)B`, of size `(n−1) × (n−1)`.
pub fn restricted_operator(a: &CMatrix, lambda: C64, v: &CVector) -> Result<CMatrix, ConditionError> {
    validate(a, v)?;
    Ok(TangentFrame::new(v)?.compress(a, lambda))
}

/// Builds the report from `‖A‖_F` and the smallest singular value of the
/// restricted operator, applying the singularity threshold.
pub fn report_from_sigma(n: usize, frobenius: f64, sigma_min: f64) -> ConditionReport {
    let well_posed = sigma_min > SINGULARITY_TOL * n as f64 * frobenius;
    ConditionReport {
        mu: if well_posed { frobenius / sigma_min } else { f64::INFINITY },
        sigma_min,
        well_posed,
        frobenius,
    }
}

/// `μ(A, λ, v) = ‖A‖_F / σ_min(A_{λ,v})`.
pub fn mu(a: &CMatrix, lambda: C64, v: &CVector) -> Result<ConditionReport, ConditionError> {
    let frobenius = a.frobenius_norm();
    if frobenius == 0.0 {
        return Err(NumlinError::ZeroMatrix.into());
    }
    let restricted = restricted_operator(a, lambda, v)?;
    Ok(report_from_sigma(a.n(), frobenius, smallest_singular_value(&restricted)))
}

/// Closed form of `μ` for a normal matrix with distinct eigenvalues:
/// `‖A‖_F / min_{k≠j} |λ_k − λ_j|`. A repeated eigenvalue gives `+∞`.
pub fn mu_normal(eigenvalues: &[C64], j: usize, frobenius: f64) -> f64 {
    assert!(j < eigenvalues.len(), "index {j} out of range");
    let gap = eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, z)| (z - eigenvalues[j]).norm())
        .fold(f64::INFINITY, f64::min);
    if gap == 0.0 {
        f64::INFINITY
    } else {
        frobenius / gap
    }
}

/// Unit left eigenvector `u` with `(Aᴴ − conj(λ)I)u ≈ 0`, taken as the left
/// singular vector of `A − λI` for its smallest singular value.
pub fn left_eigenvector(a: &CMatrix, lambda: C64) -> Result<CVector, ConditionError> {
    if !a.is_square() {
        return Err(NumlinError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    let frobenius = a.frobenius_norm();
    if frobenius == 0.0 {
        return Err(NumlinError::ZeroMatrix.into());
    }
    // Left singular vectors of X are the right singular vectors of Xᴴ, which
    // the Jacobi rotations produce orthonormal even for σ = 0.
    let xh = a.shifted(lambda).adjoint();
    let f = svd(&xh);
    let k = f.singular_values.len() - 1;
    let sigma_min = f.singular_values[k];
    if sigma_min > LEFT_EIGENVECTOR_TOL * frobenius {
        return Err(ConditionError::NotAnEigenvalue {
            sigma_min: sigma_min / frobenius,
        });
    }
    Ok(f.v.column(k).normalized()?)
}

/// Eigenvalue condition number `‖u‖‖v‖ / |⟨u, v⟩|` from a right eigenvector
/// `v` and left eigenvector `u`.
pub fn mu_lambda(v: &CVector, u: &CVector) -> Result<f64, ConditionError> {
    let ip = crate::numlin::hermitian_inner(v, u)?;
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(NumlinError::ZeroVector.into());
    }
    if ip.norm() == 0.0 {
        return Err(ConditionError::MultipleEigenvalue);
    }
    Ok(nu * nv / ip.norm())
}

/// Derivative of the solution map at a simple eigenpair in direction `Ȧ`:
/// `λ̇ = ⟨Ȧv, u⟩/⟨v, u⟩`, `v̇ = A_{λ,v}⁻¹ P_{v⊥} Ȧ v` (ambient, `⊥ v`).
pub fn solution_derivative(
    a: &CMatrix,
    lambda: C64,
    v: &CVector,
    u: &CVector,
    adot: &CMatrix,
) -> Result<(C64, CVector), ConditionError> {
    validate(a, v)?;
    if adot.rows() != a.rows() || adot.cols() != a.cols() {
        return Err(NumlinError::DimensionMismatch {
            expected: a.rows() * a.cols(),
            found: adot.rows() * adot.cols(),
        }
        .into());
    }
    let vu = v.dot(u);
    if vu.norm() == 0.0 {
        return Err(ConditionError::MultipleEigenvalue);
    }
    let adot_v = adot.matvec(v);
    let lambda_dot = adot_v.dot(u) / vu;

    let frame = TangentFrame::new(v)?;
    let restricted = frame.compress(a, lambda);
    let report = report_from_sigma(a.n(), a.frobenius_norm(), smallest_singular_value(&restricted));
    if !report.well_posed {
        return Err(ConditionError::IllPosed);
    }
    let rhs = CVector::new(frame.to_coords(&adot_v));
    let coords = crate::numlin::solve(&restricted, &rhs).map_err(|_| ConditionError::IllPosed)?;
    Ok((lambda_dot, frame.to_ambient(coords.as_slice())))
}

fn per_pair_mu(a: &CMatrix, pairs: &EigenpairSet) -> Result<Vec<f64>, ConditionError> {
    let n = a.n();
    if pairs.len() != n {
        return Err(ConditionError::IncompleteSet {
            expected: n,
            found: pairs.len(),
        });
    }
    pairs
        .iter()
        .map(|p| mu(a, p.lambda, &p.v).map(|r| r.mu))
        .collect()
}

/// `max_j μ(A, λ_j, v_j)` over a complete set of eigenpairs.
pub fn mu_max(a: &CMatrix, pairs: &EigenpairSet) -> Result<f64, ConditionError> {
    Ok(per_pair_mu(a, pairs)?.into_iter().fold(0.0, f64::max))
}

/// `√((1/n) Σ_j μ²(A, λ_j, v_j))` over a complete set of eigenpairs.
pub fn mu_av(a: &CMatrix, pairs: &EigenpairSet) -> Result<f64, ConditionError> {
    let mus = per_pair_mu(a, pairs)?;
    let n = mus.len() as f64;
    Ok((mus.iter().map(|m| m * m).sum::<f64>() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Eigenpair;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn d4() -> CMatrix {
        CMatrix::from_diagonal(&[c(-1.0, -1.0), c(-1.0, 1.0), c(1.0, -1.0), c(1.0, 1.0)])
    }

    #[test]
    fn restricted_operator_examples() {
        let a = CMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let r = restricted_operator(&a, c(2.0, 0.0), &CVector::basis(2, 0)).unwrap();
        assert_eq!((r.rows(), r.cols()), (1, 1));
        assert!((r[(0, 0)] - c(-2.0, 0.0)).norm() < 1e-15);

        let b = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let r = restricted_operator(&b, c(1.0, 0.0), &CVector::basis(2, 0)).unwrap();
        assert!((r[(0, 0)] - c(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_examples() {
        let b = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let r = mu(&b, c(1.0, 0.0), &CVector::basis(2, 0)).unwrap();
        assert!((r.mu - SQRT_2 / 2.0).abs() < 1e-15);
        assert!(r.well_posed);

        let r = mu(&d4(), c(-1.0, -1.0), &CVector::basis(4, 0)).unwrap();
        assert!((r.mu - SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn mu_is_infinite_on_double_eigenvalue() {
        let a = CMatrix::identity(3);
        let r = mu(&a, c(1.0, 0.0), &CVector::basis(3, 0)).unwrap();
        assert!(!r.well_posed);
        assert!(r.mu.is_infinite());
    }

    #[test]
    fn mu_rejects_bad_input() {
        assert!(mu(&CMatrix::zeros(2, 2), c(0.0, 0.0), &CVector::basis(2, 0)).is_err());
        assert!(mu(&d4(), c(0.0, 0.0), &CVector::zeros(4)).is_err());
        assert!(matches!(
            mu(&CMatrix::identity(1), c(1.0, 0.0), &CVector::basis(1, 0)),
            Err(ConditionError::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn mu_normal_examples() {
        assert!((mu_normal(&[c(1.0, 0.0), c(-1.0, 0.0)], 0, SQRT_2) - SQRT_2 / 2.0).abs() < 1e-15);
        let eig = d4().diagonal();
        for j in 0..4 {
            assert!((mu_normal(&eig, j, 2.0 * SQRT_2) - SQRT_2).abs() < 1e-15);
        }
        let near = mu_normal(&[c(0.0, 0.0), c(1e-9, 0.0)], 1, 1.0);
        assert!((near / 1e9 - 1.0).abs() < 1e-12);
        assert!(mu_normal(&[c(2.0, 0.0), c(2.0, 0.0)], 0, 1.0).is_infinite());
    }

    #[test]
    fn left_eigenvector_examples() {
        let a = CMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let u = left_eigenvector(&a, c(2.0, 0.0)).unwrap();
        assert!((u[0].norm() - 1.0).abs() < 1e-14 && u[1].norm() < 1e-14);

        let b = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 1.0]]);
        let u = left_eigenvector(&b, c(0.0, 0.0)).unwrap();
        let target = CVector::from_real(&[1.0, -1.0]).normalized().unwrap();
        assert!(crate::numlin::projective_distance(&u, &target).unwrap() < 1e-14);
        let res = b.adjoint_matvec(&u).norm();
        assert!(res < 1e-14);

        assert!(matches!(
            left_eigenvector(&a, c(1.0, 0.0)),
            Err(ConditionError::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn mu_lambda_examples() {
        let v = CVector::basis(3, 1);
        assert!((mu_lambda(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        let u = CVector::from_real(&[1.0, -1.0]).normalized().unwrap();
        let v = CVector::basis(2, 0);
        assert!((mu_lambda(&v, &u).unwrap() - SQRT_2).abs() < 1e-14);
        assert!(matches!(
            mu_lambda(&CVector::basis(2, 0), &CVector::basis(2, 1)),
            Err(ConditionError::MultipleEigenvalue)
        ));
    }

    #[test]
    fn mu_lambda_bounded_by_mu_on_nonnormal_example() {
        // [[0,1],[0,1]] at λ = 0: μ_λ = √2 and μ = ‖A‖_F/|0−1| = √2.
        let b = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 1.0]]);
        let v = CVector::basis(2, 0);
        let u = left_eigenvector(&b, c(0.0, 0.0)).unwrap();
        let ml = mu_lambda(&v, &u).unwrap();
        let m = mu(&b, c(0.0, 0.0), &v).unwrap().mu;
        assert!(ml <= (1.0 + m * m).sqrt() + 1e-12);
    }

    #[test]
    fn solution_derivative_examples() {
        let a = CMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let e1 = CVector::basis(2, 0);
        let e11 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let (ld, vd) = solution_derivative(&a, c(2.0, 0.0), &e1, &e1, &e11).unwrap();
        assert!((ld - c(1.0, 0.0)).norm() < 1e-15);
        assert!(vd.norm() < 1e-15);

        let e21 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let (ld, vd) = solution_derivative(&a, c(2.0, 0.0), &e1, &e1, &e21).unwrap();
        assert!(ld.norm() < 1e-15);
        assert!(vd[0].norm() < 1e-15);
        assert!((vd[1] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_max_and_av_on_d4() {
        let a = d4();
        let pairs = EigenpairSet::new(
            a.diagonal()
                .into_iter()
                .enumerate()
                .map(|(j, z)| Eigenpair::new(z, CVector::basis(4, j), 0.0))
                .collect(),
        );
        let mmax = mu_max(&a, &pairs).unwrap();
        let mav = mu_av(&a, &pairs).unwrap();
        assert!((mmax - SQRT_2).abs() < 1e-14);
        assert!((mav - SQRT_2).abs() < 1e-14);

        let short = EigenpairSet::new(pairs.iter().take(3).cloned().collect());
        assert!(matches!(mu_max(&a, &short), Err(ConditionError::IncompleteSet { .. })));
    }
}
