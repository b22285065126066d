//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! One-sided Jacobi orthogonalises the columns of the working matrix with
//! plane rotations applied from the right. It computes small singular values
//! to high relative accuracy, which is what the condition number needs, and
//! it behaves gracefully on rank-deficient input.

use super::matrix::{CMatrix, C64, ONE, ZERO};

const MAX_SWEEPS: usize = 80;

/// `A = U·diag(σ)·Vᴴ` with `σ` sorted in descending order.
///
/// Columns of `u` belonging to zero singular values are left as zero vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

/// Column-major working storage for the rotations.
struct Columns {
    rows: usize,
    cols: Vec<Vec<C64>>,
}

impl Columns {
    fn of(a: &CMatrix) -> Self {
        Columns {
            rows: a.rows(),
            cols: (0..a.cols()).map(|j| a.column(j).into_vec()).collect(),
        }
    }

    fn of_adjoint(a: &CMatrix) -> Self {
        Columns {
            rows: a.cols(),
            cols: (0..a.rows())
                .map(|i| a.row(i).iter().map(|z| z.conj()).collect())
                .collect(),
        }
    }
}

fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Runs Jacobi sweeps in place; optionally accumulates the right rotations.
fn orthogonalize(w: &mut Columns, mut acc: Option<&mut Vec<Vec<C64>>>) {
    let k = w.cols.len();
    if k < 2 {
        return;
    }
    let tol = f64::EPSILON * (w.rows.max(1) as f64);
    let mut norms: Vec<f64> = w.cols.iter().map(|c| norm_sqr(c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = pair_mut(&mut w.cols, p, q);
                let gamma = cp
                    .iter()
                    .zip(cq.iter())
                    .fold(ZERO, |s, (a, b)| s + a.conj() * b);
                let g = gamma.norm();
                if g <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g; // e^{−iφ}
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase * s;
                let cph = phase * c;
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let ap = *a;
                    let bq = *b;
                    *a = ap * c - bq * sp;
                    *b = ap * s + bq * cph;
                }
                // Norm updates follow from the 2×2 rotation; recompute to
                // avoid drift on long sweeps.
                norms[p] = norm_sqr(cp);
                norms[q] = norm_sqr(cq);
                if let Some(v) = acc.as_deref_mut() {
                    let (vp, vq) = pair_mut(v, p, q);
                    for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
                        let ap = *a;
                        let bq = *b;
                        *a = ap * c - bq * sp;
                        *b = ap * s + bq * cph;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Singular values of an arbitrary rectangular matrix, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let mut w = if a.rows() >= a.cols() {
        Columns::of(a)
    } else {
        Columns::of_adjoint(a)
    };
    orthogonalize(&mut w, None);
    let mut s: Vec<f64> = w.cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// The smallest singular value; `0` for rank-deficient input.
pub fn smallest_singular_value(a: &CMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Full thin SVD with both factors.
pub fn svd(a: &CMatrix) -> Svd {
    let transposed = a.rows() < a.cols();
    let mut w = if transposed {
        Columns::of_adjoint(a)
    } else {
        Columns::of(a)
    };
    let k = w.cols.len();
    let mut acc: Vec<Vec<C64>> = (0..k)
        .map(|j| {
            let mut e = vec![ZERO; k];
            e[j] = ONE;
            e
        })
        .collect();
    orthogonalize(&mut w, Some(&mut acc));

    let sigma: Vec<f64> = w.cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));

    // Working matrix W·V = U·Σ: the orthogonalised columns give the left
    // factor of W, the accumulated rotations give the right one.
    let m = w.rows;
    let mut left = CMatrix::zeros(m, k);
    let mut right = CMatrix::zeros(k, k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        values.push(s);
        if s > 0.0 {
            for i in 0..m {
                left[(i, dst)] = w.cols[src][i] / s;
            }
        }
        for i in 0..k {
            right[(i, dst)] = acc[src][i];
        }
    }
    if transposed {
        // Aᴴ = left·Σ·rightᴴ  ⇒  A = right·Σ·leftᴴ.
        Svd {
            singular_values: values,
            u: right,
            v: left,
        }
    } else {
        Svd {
            singular_values: values,
            u: left,
            v: right,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_has_unit_singular_values() {
        assert!((smallest_singular_value(&CMatrix::identity(3)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_smallest_value() {
        let a = CMatrix::from_real_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        assert!((smallest_singular_value(&a) - 1.0).abs() < 1e-15);
        assert_eq!(singular_values(&a), vec![3.0, 1.0]);
    }

    #[test]
    fn rank_one_nilpotent_is_singular() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(smallest_singular_value(&a), 0.0);
    }

    #[test]
    fn rectangular_inputs_both_orientations() {
        // Columns (1,0,0) and (0,2,0): singular values {2, 1}.
        let tall = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0], &[0.0, 0.0]]);
        assert_eq!(singular_values(&tall), vec![2.0, 1.0]);
        let wide = tall.adjoint();
        assert_eq!(singular_values(&wide), vec![2.0, 1.0]);
    }

    #[test]
    fn reconstruction_from_factors() {
        let a = CMatrix::from_fn(4, 3, |i, j| c((i + 2 * j) as f64 * 0.37 - 1.0, ((i * j) as f64).sin()));
        for m in [a.clone(), a.adjoint()] {
            let f = svd(&m);
            let sig = CMatrix::from_diagonal(
                &f.singular_values.iter().map(|&s| c(s, 0.0)).collect::<Vec<_>>(),
            );
            let rec = f.u.matmul(&sig).matmul(&f.v.adjoint());
            assert!((&rec - &m).max_abs() < 1e-13, "{:?}", rec);
            let vtv = f.v.adjoint().matmul(&f.v);
            assert!((&vtv - &CMatrix::identity(vtv.rows())).max_abs() < 1e-13);
        }
    }

    #[test]
    fn small_singular_value_relative_accuracy() {
        // U·diag(1, 1e-9)·Vᴴ with explicit rotations; Jacobi keeps the tiny
        // value to near machine relative precision.
        let (ca, sa) = (0.6, 0.8);
        let u = CMatrix::from_row_major(2, 2, vec![c(ca, 0.0), c(-sa, 0.0), c(sa, 0.0), c(ca, 0.0)]).unwrap();
        let d = CMatrix::from_diagonal(&[c(1.0, 0.0), c(1e-9, 0.0)]);
        let v = CMatrix::from_row_major(2, 2, vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let a = u.matmul(&d).matmul(&v.adjoint());
        let s = smallest_singular_value(&a);
        assert!((s / 1e-9 - 1.0).abs() < 1e-7, "{s}");
    }
}
