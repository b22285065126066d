use super::matrix::{CMatrix, CVector, C64, ONE, ZERO};
use super::NumlinError;

/// LU factorisation with partial pivoting, `P·A = L·U`, stored packed.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    /// Factorises `a`. Fails when a pivot has modulus at most `singular_tol`.
    pub fn factor(a: &CMatrix, singular_tol: f64) -> Result<Self, NumlinError> {
        Self::factor_impl(a, singular_tol, None)
    }

    /// Factorises `a`, replacing any pivot smaller than `floor` in modulus by
    /// `floor` (keeping its phase). Never fails; used by inverse iteration
    /// where the matrix is singular to working precision on purpose.
    pub fn factor_with_floor(a: &CMatrix, floor: f64) -> Self {
        Self::factor_impl(a, -1.0, Some(floor)).expect("floored factorisation cannot fail")
    }

    fn factor_impl(a: &CMatrix, singular_tol: f64, floor: Option<f64>) -> Result<Self, NumlinError> {
        if !a.is_square() {
            return Err(NumlinError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.n();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let m = lu[(i, k)].norm();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if piv != k {
                let cols = lu.cols();
                let data = lu.as_mut_slice();
                for j in 0..cols {
                    data.swap(k * cols + j, piv * cols + j);
                }
                perm.swap(k, piv);
                swaps += 1;
            }
            if let Some(f) = floor {
                if best < f {
                    let p = lu[(k, k)];
                    lu[(k, k)] = if p.norm() > 0.0 { p / p.norm() * f } else { C64::new(f, 0.0) };
                }
            } else if best <= singular_tol || !best.is_finite() {
                return Err(NumlinError::Singular);
            }
            let data = lu.as_mut_slice();
            let inv = ONE / data[k * n + k];
            let (upper, lower) = data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l == ZERO {
                    continue;
                }
                for (x, &ukj) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x -= l * ukj;
                }
            }
        }
        Ok(Lu { n, lu, perm, swaps })
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let a = self.lu.as_slice();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &a[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(x[i], |acc, (l, xj)| acc - l * xj);
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &a[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(x[i], |acc, (u, xj)| acc - u * xj);
            x[i] = s / a[i * n + i];
        }
        CVector::new(x)
    }

    /// Solves `Aᴴ·x = b`.
    pub fn solve_adjoint(&self, b: &CVector) -> CVector {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut z: Vec<C64> = b.as_slice().to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)].conj() * z[j];
            }
            z[i] = s / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)].conj() * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        CVector::new(x)
    }

    pub fn determinant(&self) -> C64 {
        let d: C64 = (0..self.n).map(|i| self.lu[(i, i)]).product();
        if self.swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }

    /// Smallest pivot modulus.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.lu[(i, i)].norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Solves `A·x = b`, failing on an exactly singular pivot.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector, NumlinError> {
    Ok(Lu::factor(a, 0.0)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solves_complex_system() {
        let a = CMatrix::from_row_major(
            3,
            3,
            vec![c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0), c(4.0, 0.0), c(0.5, 0.5), c(0.0, 0.0), c(1.0, 1.0), c(-1.0, 0.0), c(3.0, 2.0)],
        )
        .unwrap();
        let x = CVector::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(-1.0, 3.0)]);
        let b = a.matvec(&x);
        let got = solve(&a, &b).unwrap();
        let adj = Lu::factor(&a, 0.0).unwrap().solve_adjoint(&a.adjoint_matvec(&x));
        assert!((&adj - &x).norm() < 1e-13);
        assert!((&got - &x).norm() < 1e-13);
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = CMatrix::from_real_rows(&[&[0.0, 2.0], &[3.0, 1.0]]);
        let d = Lu::factor(&a, 0.0).unwrap().determinant();
        assert!((d - c(-6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_detected_and_floored() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(Lu::factor(&a, 1e-12), Err(NumlinError::Singular)));
        let f = Lu::factor_with_floor(&a, 1e-10);
        assert!(f.min_pivot() >= 1e-10);
        let x = f.solve(&CVector::from_real(&[1.0, 0.0]));
        assert!(x.all_finite());
    }
}
