//! Complex Gaussian and truncated-Gaussian matrix ensembles with
//! reproducible per-trial streams.
//!
//! Every trial `i` of an experiment seeded with `seed` draws from its own
//! ChaCha stream `(seed, i)`, so results do not depend on evaluation order or
//! on how trials are spread across threads.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numlin::{CMatrix, C64};

pub type Stream = ChaCha8Rng;

/// Cap on rejection-sampling attempts for truncated draws.
pub const MAX_TRUNCATION_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandomError {
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("truncation radius must be positive and finite, got {0}")]
    BadTruncation(f64),
    #[error("center must be square")]
    NotSquare,
    #[error("no sample accepted in {0} attempts")]
    RejectionCapExceeded(usize),
}

/// The independent stream for trial `index` of an experiment seeded `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed `hash(seed, i)` for trial `i`; printed in reports so a single
/// trial can be replayed with `stream(trial_seed(seed, i), 0)`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

/// `T = √2·n`, the default truncation radius.
pub fn default_truncation(n: usize) -> f64 {
    SQRT_2 * n as f64
}

/// `X + iY` with `X, Y` independent `N(0, σ²/2)`, so `E|z|² = σ²`.
pub fn complex_gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> C64 {
    // Box–Muller on one pair of uniforms; 1 − u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = sigma * (-u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    C64::new(r * c, r * s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec {
    pub center: CMatrix,
    pub sigma: f64,
    pub truncation: Option<f64>,
}

impl GaussianSpec {
    pub fn new(center: CMatrix, sigma: f64, truncation: Option<f64>) -> Result<Self, RandomError> {
        if !center.is_square() {
            return Err(RandomError::NotSquare);
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(RandomError::BadSigma(sigma));
        }
        if let Some(t) = truncation {
            if !(t > 0.0 && t.is_finite()) {
                return Err(RandomError::BadTruncation(t));
            }
        }
        Ok(GaussianSpec {
            center,
            sigma,
            truncation,
        })
    }

    /// `N(0, σ²Id)` on `ℂⁿˣⁿ`.
    pub fn centered(n: usize, sigma: f64) -> Result<Self, RandomError> {
        Self::new(CMatrix::zeros(n, n), sigma, None)
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }
}

/// `n×n` matrix with i.i.d. `N_ℂ(0, σ²)` entries, filled row-major.
pub fn centered_gaussian<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_gaussian(sigma, rng))
}

/// `Ā + G`, `G` centered Gaussian. The truncation field is ignored.
pub fn gaussian_matrix<R: Rng + ?Sized>(spec: &GaussianSpec, rng: &mut R) -> CMatrix {
    let g = centered_gaussian(spec.n(), spec.sigma, rng);
    &spec.center + &g
}

/// A truncated draw together with the number of attempts it took.
#[derive(Clone, Debug)]
pub struct TruncatedSample {
    pub matrix: CMatrix,
    pub attempts: usize,
}

/// Centered `N_T(0, σ²Id)`: redraw `G` until `‖G‖_F ≤ T`.
pub fn truncated_centered<R: Rng + ?Sized>(
    n: usize,
    sigma: f64,
    truncation: f64,
    rng: &mut R,
) -> Result<TruncatedSample, RandomError> {
    for attempts in 1..=MAX_TRUNCATION_ATTEMPTS {
        let g = centered_gaussian(n, sigma, rng);
        if g.frobenius_norm() <= truncation {
            return Ok(TruncatedSample { matrix: g, attempts });
        }
    }
    Err(RandomError::RejectionCapExceeded(MAX_TRUNCATION_ATTEMPTS))
}

/// `Ā + G` with `G ~ N_T(0, σ²Id)`, i.e. rejection on `‖A − Ā‖_F ≤ T`.
/// `T` defaults to `√2·n` when `spec.truncation` is `None`.
pub fn truncated_gaussian_matrix<R: Rng + ?Sized>(
    spec: &GaussianSpec,
    rng: &mut R,
) -> Result<TruncatedSample, RandomError> {
    let n = spec.n();
    let t = spec.truncation.unwrap_or_else(|| default_truncation(n));
    let s = truncated_centered(n, spec.sigma, t, rng)?;
    Ok(TruncatedSample {
        matrix: &spec.center + &s.matrix,
        attempts: s.attempts,
    })
}

/// Haar-distributed unitary: Gram–Schmidt on the columns of a Gaussian
/// matrix (with reorthogonalisation), which fixes the phases of `R` to be
/// positive.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = centered_gaussian(n, 1.0, rng);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| g.column(j).into_vec()).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..n {
                    let q = cols[k][i];
                    cols[j][i] -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Gaussian matrix rescaled to unit Frobenius norm.
pub fn unit_norm_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = centered_gaussian(n, 1.0, rng);
    let norm = g.frobenius_norm();
    g.scale_real(1.0 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = centered_gaussian(4, 1.0, &mut stream(11, 3));
        let b = centered_gaussian(4, 1.0, &mut stream(11, 3));
        let c = centered_gaussian(4, 1.0, &mut stream(11, 4));
        let d = centered_gaussian(4, 1.0, &mut stream(12, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }

    #[test]
    fn complex_gaussian_moments() {
        let mut rng = stream(5, 0);
        let sigma = 1.7;
        let draws: Vec<C64> = (0..100_000).map(|_| complex_gaussian(sigma, &mut rng)).collect();
        let mean: C64 = draws.iter().sum::<C64>() / draws.len() as f64;
        let second = draws.iter().map(|z| z.norm_sqr()).sum::<f64>() / draws.len() as f64;
        let re2 = draws.iter().map(|z| z.re * z.re).sum::<f64>() / draws.len() as f64;
        assert!(mean.norm() <= 0.02 * sigma);
        assert!((second / (sigma * sigma) - 1.0).abs() < 0.03);
        assert!((re2 / (sigma * sigma / 2.0) - 1.0).abs() < 0.03);
    }

    #[test]
    fn spec_validation() {
        assert!(GaussianSpec::centered(3, 0.0).is_err());
        assert!(GaussianSpec::new(CMatrix::zeros(2, 2), 1.0, Some(-1.0)).is_err());
        assert!(GaussianSpec::new(CMatrix::zeros(2, 3), 1.0, None).is_err());
    }

    #[test]
    fn truncated_draws_respect_radius() {
        let center = CMatrix::identity(3).scale_real(1.0 / 3f64.sqrt());
        let spec = GaussianSpec::new(center.clone(), 1.0, Some(2.0)).unwrap();
        let mut rng = stream(9, 0);
        for _ in 0..200 {
            let s = truncated_gaussian_matrix(&spec, &mut rng).unwrap();
            assert!((&s.matrix - &center).frobenius_norm() <= 2.0);
        }
        let mut rng = stream(9, 1);
        assert_eq!(
            truncated_centered(6, 1.0, 1e-6, &mut rng).unwrap_err(),
            RandomError::RejectionCapExceeded(MAX_TRUNCATION_ATTEMPTS)
        );
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let u = haar_unitary(6, &mut stream(2, 0));
        let p = u.adjoint().matmul(&u);
        assert!((&p - &CMatrix::identity(6)).max_abs() < 1e-13);
    }
}
