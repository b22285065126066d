//! The start system: a diagonal matrix whose entries are points of a square
//! grid in the complex plane, with its eigenpairs known exactly.

use thiserror::Error;

use crate::condition::mu_normal;
use crate::numlin::{CMatrix, CVector, C64};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InitialError {
    #[error("grid parameter k must be at least 1")]
    ZeroGrid,
    #[error("the start system needs n >= 2, got {0}")]
    DimensionTooSmall(usize),
}

/// The `(k+1)²` points `(−1 + 2p/k) + i(−1 + 2q/k)`, `0 ≤ p, q ≤ k`, ordered
/// with `p` major and `q` minor.
pub fn grid_points(k: usize) -> Result<Vec<C64>, InitialError> {
    if k == 0 {
        return Err(InitialError::ZeroGrid);
    }
    let step = 2.0 / k as f64;
    let coord = |p: usize| if p == k { 1.0 } else { -1.0 + step * p as f64 };
    let mut pts = Vec::with_capacity((k + 1) * (k + 1));
    for p in 0..=k {
        for q in 0..=k {
            pts.push(C64::new(coord(p), coord(q)));
        }
    }
    Ok(pts)
}

/// `⌈√n⌉ − 1`, the smallest `k` with `(k+1)² ≥ n`.
pub fn grid_parameter(n: usize) -> usize {
    let mut r = (n as f64).sqrt().ceil() as usize;
    // guard the float ceiling against off-by-one at perfect squares
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r - 1
}

#[derive(Clone, Debug)]
pub struct InitialSystem {
    pub n: usize,
    pub k: usize,
    /// Diagonal matrix of the first `n` grid points.
    pub d_n: CMatrix,
    /// `D_n / ‖D_n‖_F`.
    pub m: CMatrix,
    /// Diagonal entries of `m`.
    pub eigenvalues: Vec<C64>,
    /// The exact eigenpairs `(m_jj, e_j)` of `m`.
    pub pairs: Vec<(C64, CVector)>,
}

impl InitialSystem {
    pub fn new(n: usize) -> Result<Self, InitialError> {
        if n < 2 {
            return Err(InitialError::DimensionTooSmall(n));
        }
        let k = grid_parameter(n);
        let diag: Vec<C64> = grid_points(k)?.into_iter().take(n).collect();
        let d_n = CMatrix::from_diagonal(&diag);
        let norm = d_n.frobenius_norm();
        let m = d_n.scale_real(1.0 / norm);
        let eigenvalues = m.diagonal();
        let pairs = eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &z)| (z, CVector::basis(n, j)))
            .collect();
        Ok(InitialSystem {
            n,
            k,
            d_n,
            m,
            eigenvalues,
            pairs,
        })
    }

    /// The start pair `(m_jj, e_j)` (zero-based `j`).
    pub fn pair(&self, j: usize) -> (C64, CVector) {
        self.pairs[j].clone()
    }

    /// Minimum distance between two diagonal entries of `D_n`.
    pub fn min_gap(&self) -> f64 {
        let z = self.d_n.diagonal();
        let mut gap = f64::INFINITY;
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                gap = gap.min((z[i] - z[j]).norm());
            }
        }
        gap
    }
}

pub fn initial_system(n: usize) -> Result<InitialSystem, InitialError> {
    InitialSystem::new(n)
}

/// `μ(D_n, z_j, e_j)` for every `j`, by the normal-matrix closed form.
pub fn initial_condition_numbers(n: usize) -> Result<Vec<f64>, InitialError> {
    let sys = InitialSystem::new(n)?;
    let z = sys.d_n.diagonal();
    let frob = sys.d_n.frobenius_norm();
    Ok((0..n).map(|j| mu_normal(&z, j, frob)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn grid_k1_and_k2() {
        assert_eq!(
            grid_points(1).unwrap(),
            vec![c(-1.0, -1.0), c(-1.0, 1.0), c(1.0, -1.0), c(1.0, 1.0)]
        );
        let g2 = grid_points(2).unwrap();
        assert_eq!(g2.len(), 9);
        assert_eq!(g2[4], c(0.0, 0.0));
        assert!(grid_points(7).unwrap().iter().all(|z| z.norm() <= SQRT_2 + 1e-15));
        assert_eq!(grid_points(0), Err(InitialError::ZeroGrid));
    }

    #[test]
    fn grid_parameter_matches_ceiling_formula() {
        for n in 2..5000usize {
            let k = grid_parameter(n);
            assert!((k + 1) * (k + 1) >= n && k * k < n, "n={n} k={k}");
        }
        assert_eq!(grid_parameter(4), 1);
        assert_eq!(grid_parameter(5), 2);
        assert_eq!(grid_parameter(9), 2);
        assert_eq!(grid_parameter(10), 3);
    }

    #[test]
    fn small_systems() {
        let s2 = initial_system(2).unwrap();
        assert!((s2.d_n.frobenius_norm() - 2.0).abs() < 1e-15);
        assert_eq!(s2.m.diagonal(), vec![c(-0.5, -0.5), c(-0.5, 0.5)]);

        let s4 = initial_system(4).unwrap();
        assert!((s4.d_n.frobenius_norm() - 2.0 * SQRT_2).abs() < 1e-15);

        let s5 = initial_system(5).unwrap();
        assert_eq!(s5.k, 2);
        assert_eq!(
            s5.d_n.diagonal(),
            vec![c(-1.0, -1.0), c(-1.0, 0.0), c(-1.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]
        );
        assert!(matches!(initial_system(1), Err(InitialError::DimensionTooSmall(1))));
    }

    #[test]
    fn start_pairs_are_exact() {
        let s = initial_system(7).unwrap();
        assert!((s.m.frobenius_norm() - 1.0).abs() < 1e-14);
        for j in 0..7 {
            let (lam, e) = s.pair(j);
            let r = crate::numlin::eigen_residual(&s.m, lam, &e);
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn initial_condition_examples() {
        for m in initial_condition_numbers(4).unwrap() {
            assert!((m - SQRT_2).abs() < 1e-15);
        }
        for m in initial_condition_numbers(2).unwrap() {
            assert!((m - 1.0).abs() < 1e-15);
        }
    }
}
