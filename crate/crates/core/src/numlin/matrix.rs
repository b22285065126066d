use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use super::NumlinError;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A dense complex column vector.
#[derive(Clone, PartialEq, Default)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn new(entries: Vec<C64>) -> Self {
        CVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        CVector(vec![ZERO; n])
    }

    /// The `i`-th standard basis vector of length `n` (zero-based).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = ONE;
        v
    }

    pub fn from_real(entries: &[f64]) -> Self {
        CVector(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Euclidean norm, accumulated with scaling so tiny and huge entries
    /// do not underflow or overflow.
    pub fn norm(&self) -> f64 {
        scaled_norm(self.0.iter())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> CVector {
        CVector(self.0.iter().map(|&z| z * s).collect())
    }

    /// `v / ‖v‖`.
    pub fn normalized(&self) -> Result<CVector, NumlinError> {
        let nrm = self.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(NumlinError::ZeroVector);
        }
        Ok(self.scale_real(1.0 / nrm))
    }

    /// Hermitian inner product `Σ self_i · conj(other_i)`.
    pub fn dot(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(ZERO, |acc, (a, b)| acc + a * b.conj())
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl From<Vec<C64>> for CVector {
    fn from(v: Vec<C64>) -> Self {
        CVector(v)
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

/// A dense row-major complex matrix. Most of the crate works with square
/// matrices; rectangular shapes appear for tangent bases and SVD inputs.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, NumlinError> {
        if data.len() != rows * cols {
            return Err(NumlinError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        CMatrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self − shift·I` for a square matrix.
    pub fn shifted(&self, shift: C64) -> CMatrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= shift;
        }
        m
    }

    /// `t·self + (1 − t)·other`.
    pub fn lerp(&self, other: &CMatrix, t: f64) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a * t + b * (1.0 - t))
                .collect(),
        }
    }

    pub fn matvec(&self, x: &CVector) -> CVector {
        debug_assert_eq!(self.cols, x.len());
        let xs = x.as_slice();
        CVector(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(xs.iter())
                        .fold(ZERO, |acc, (a, b)| acc + a * b)
                })
                .collect(),
        )
    }

    /// `selfᴴ x` without forming the adjoint.
    pub fn adjoint_matvec(&self, x: &CVector) -> CVector {
        debug_assert_eq!(self.rows, x.len());
        let mut out = vec![ZERO; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        CVector(out)
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Frobenius inner product `Σ a_ij · conj(b_ij)`.
    pub fn frobenius_inner(&self, other: &CMatrix) -> C64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(ZERO, |acc, (a, b)| acc + a * b.conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        scaled_norm(self.data.iter())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `U · self · Uᴴ`.
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        u.matmul(self).matmul(&u.adjoint())
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

fn scaled_norm<'a>(entries: impl Iterator<Item = &'a C64> + Clone) -> f64 {
    let plain: f64 = entries.clone().map(|z| z.norm_sqr()).sum();
    if plain.is_finite() && plain > 1e-280 && plain < 1e280 {
        return plain.sqrt();
    }
    // LAPACK-style two-accumulator hypot over the real and imaginary parts.
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for z in entries {
        for x in [z.re, z.im] {
            if x != 0.0 {
                let ax = x.abs();
                if scale < ax {
                    ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
                    scale = ax;
                } else {
                    ssq += (ax / scale) * (ax / scale);
                }
            }
        }
    }
    scale * ssq.sqrt()
}
