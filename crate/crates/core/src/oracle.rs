//! Reference eigensolver for validation: Householder reduction to
//! Hessenberg form, shifted QR for the eigenvalues, inverse iteration for the
//! eigenvectors. Nothing here is used by the continuation itself.

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::numlin::{CMatrix, CVector, Lu, NumlinError, C64};
use crate::random::{complex_gaussian, stream};

/// Eigenvalues closer than this (relative to `‖A‖_F`) are flagged as a cluster.
pub const CLUSTER_TOL: f64 = 1e-10;

const MAX_QR_ITERATIONS_PER_EIGENVALUE: usize = 60;
const INVERSE_ITERATION_STEPS: usize = 2;
const INVERSE_ITERATION_SEED: u64 = 0x5eed_0f_e16e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Numlin(#[from] NumlinError),
    #[error("eigenpair sets have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: C64,
    /// Unit norm.
    pub v: CVector,
    /// `‖Av − λv‖` for the unit `v`.
    pub residual: f64,
    /// False when the QR iteration gave up before isolating this eigenvalue.
    pub converged: bool,
}

impl Eigenpair {
    pub fn new(lambda: C64, v: CVector, residual: f64) -> Self {
        Eigenpair {
            lambda,
            v,
            residual,
            converged: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EigenpairSet {
    pub pairs: Vec<Eigenpair>,
    /// Some two eigenvalues lie within `CLUSTER_TOL·‖A‖_F` of each other.
    pub clustered: bool,
}

impl EigenpairSet {
    pub fn new(pairs: Vec<Eigenpair>) -> Self {
        EigenpairSet {
            pairs,
            clustered: false,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Eigenpair> {
        self.pairs.iter()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Orders complex numbers by real part, then imaginary part.
pub fn lex_cmp(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.n();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // u = x + phase·‖x‖·e₁, reflector I − 2uuᴴ/‖u‖²
        let mut u: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        u[0] += phase * alpha_norm;
        let unorm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if unorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / unorm2;
        let hs = h.as_mut_slice();
        // left: rows k+1.., all columns
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (t, ui) in u.iter().enumerate() {
                s += ui.conj() * hs[(k + 1 + t) * n + j];
            }
            s *= beta;
            for (t, ui) in u.iter().enumerate() {
                hs[(k + 1 + t) * n + j] -= ui * s;
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (t, ui) in u.iter().enumerate() {
                s += hs[i * n + k + 1 + t] * ui;
            }
            s *= beta;
            for (t, ui) in u.iter().enumerate() {
                hs[i * n + k + 1 + t] -= s * ui.conj();
            }
        }
        for i in k + 2..n {
            hs[i * n + k] = C64::new(0.0, 0.0);
        }
    }
    h
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix by shifted QR with deflation.
/// The flag is false for eigenvalues read off an unconverged block.
fn hessenberg_eigenvalues(mut h: CMatrix) -> Vec<(C64, bool)> {
    let n = h.n();
    let eps = f64::EPSILON;
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut out = vec![(C64::new(0.0, 0.0), true); n];
    let mut hi = n;
    let mut iter = 0;
    while hi > 0 {
        let last = hi - 1;
        let mut l = last;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let reference = if diag == 0.0 { scale } else { diag };
            if sub <= eps * reference {
                h.as_mut_slice()[l * n + l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == last {
            out[last] = (h[(last, last)], true);
            hi -= 1;
            iter = 0;
            continue;
        }
        if iter >= MAX_QR_ITERATIONS_PER_EIGENVALUE {
            for i in l..hi {
                out[i] = (h[(i, i)], false);
            }
            hi = l;
            iter = 0;
            continue;
        }
        iter += 1;

        let shift = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(last, last)] + C64::new(0.75, 0.4375) * h[(last, last - 1)].norm()
        } else {
            wilkinson_shift(
                h[(last - 1, last - 1)],
                h[(last - 1, last)],
                h[(last, last - 1)],
                h[(last, last)],
            )
        };
        qr_step(&mut h, l, last, shift);
    }
    out
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let e1 = half_tr + root;
    let e2 = half_tr - root;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// One explicit shifted QR step `H − σI = QR`, `H ← RQ + σI` on the
/// diagonal block `lo..=hi`.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    let n = h.n();
    let hs = h.as_mut_slice();
    for i in lo..=hi {
        hs[i * n + i] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(hs[k * n + k], hs[(k + 1) * n + k]);
        for j in k..=hi {
            let h1 = hs[k * n + j];
            let h2 = hs[(k + 1) * n + j];
            hs[k * n + j] = h1 * c + s * h2;
            hs[(k + 1) * n + j] = -s.conj() * h1 + h2 * c;
        }
        hs[(k + 1) * n + k] = C64::new(0.0, 0.0);
        rots.push((c, s));
    }
    for (idx, (c, s)) in rots.into_iter().enumerate() {
        let k = lo + idx;
        for i in lo..=(k + 1).min(hi) {
            let h1 = hs[i * n + k];
            let h2 = hs[i * n + k + 1];
            hs[i * n + k] = h1 * c + h2 * s.conj();
            hs[i * n + k + 1] = -h1 * s + h2 * c;
        }
    }
    for i in lo..=hi {
        hs[i * n + i] += shift;
    }
}

/// Unit eigenvector for `lambda` by inverse iteration from a seeded start.
fn inverse_iteration(a: &CMatrix, lambda: C64, index: u64) -> CVector {
    let n = a.n();
    let floor = f64::EPSILON * a.frobenius_norm().max(f64::MIN_POSITIVE);
    let lu = Lu::factor_with_floor(&a.shifted(lambda), floor);
    let mut rng = stream(INVERSE_ITERATION_SEED, index);
    let mut x = CVector::new((0..n).map(|_| complex_gaussian(1.0, &mut rng)).collect());
    for _ in 0..INVERSE_ITERATION_STEPS {
        let y = lu.solve(&x);
        x = match y.normalized() {
            Ok(unit) if unit.all_finite() => unit,
            _ => {
                // restart from a fresh vector
                CVector::new((0..n).map(|_| C64::new(rng.gen::<f64>(), 0.0)).collect())
            }
        };
    }
    x.normalized().unwrap_or_else(|_| CVector::basis(n, 0))
}

/// Full spectrum and eigenvectors of `a`, sorted by `(Re λ, Im λ)`.
pub fn reference_eigenpairs(a: &CMatrix) -> Result<EigenpairSet, OracleError> {
    if !a.is_square() {
        return Err(NumlinError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    let n = a.n();
    if n == 0 {
        return Err(NumlinError::Empty.into());
    }
    let mut eigs = hessenberg_eigenvalues(hessenberg(a));
    eigs.sort_by(|x, y| lex_cmp(&x.0, &y.0));

    let frob = a.frobenius_norm();
    let mut clustered = false;
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i].0 - eigs[j].0).norm() < CLUSTER_TOL * frob {
                clustered = true;
            }
        }
    }

    let pairs = eigs
        .into_iter()
        .enumerate()
        .map(|(j, (lambda, converged))| {
            let v = inverse_iteration(a, lambda, j as u64);
            let mut r = a.matvec(&v);
            for (ri, vi) in r.as_mut_slice().iter_mut().zip(v.iter()) {
                *ri -= lambda * vi;
            }
            Eigenpair {
                lambda,
                residual: r.norm(),
                v,
                converged,
            }
        })
        .collect();
    Ok(EigenpairSet { pairs, clustered })
}

/// Result of [`match_pairs`]: `permutation[i]` is the reference index
/// assigned to computed pair `i`, at eigenvalue distance `distances[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub permutation: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Matching {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Assignment minimising `Σ|λᵢ − λ′_{π(i)}|`.
pub fn match_pairs(computed: &EigenpairSet, reference: &EigenpairSet) -> Result<Matching, OracleError> {
    match_eigenvalues(&computed.eigenvalues(), &reference.eigenvalues())
}

pub fn match_eigenvalues(computed: &[C64], reference: &[C64]) -> Result<Matching, OracleError> {
    if computed.len() != reference.len() {
        return Err(OracleError::SizeMismatch(computed.len(), reference.len()));
    }
    let n = computed.len();
    let cost: Vec<Vec<f64>> = computed
        .iter()
        .map(|a| reference.iter().map(|b| (a - b).norm()).collect())
        .collect();
    let permutation = hungarian(&cost);
    let distances = (0..n).map(|i| cost[i][permutation[i]]).collect();
    Ok(Matching {
        permutation,
        distances,
    })
}

/// Minimum-cost perfect matching on a square cost matrix (potentials
/// formulation, O(n³)). Returns the column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
