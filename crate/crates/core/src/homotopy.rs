//! Certified path-following along the segment from a start matrix `M` to the
//! target `A`, and the single/all-eigenpair drivers built on it.
//!
//! The segment is parameterised by `τ ∈ [0, 1]`, the fraction of the sphere
//! angle `α = d_S(M, A)` travelled, so that each step moves the normalised
//! matrix by `α·Δτ`. The step rule is `Δτ = ξ / (α μ²)` with `μ` taken at
//! the current approximate triple; one Newton step is applied after each
//! move.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::condition::{self, report_from_sigma, ConditionError};
use crate::initial::{initial_system, InitialError, InitialSystem};
use crate::newton::{newton_iterate, newton_step, pair_dist, NewtonError};
use crate::numlin::{
    relative_residual, smallest_singular_value, sphere_distance, CMatrix, CVector, Lu, NumlinError,
    TangentFrame, C64,
};
use crate::oracle::{Eigenpair, EigenpairSet};

/// The constants of the certified step rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathConstants {
    pub eps: f64,
    pub c_eps: f64,
    pub xi: f64,
    pub c0: f64,
}

impl PathConstants {
    pub const CERTIFIED: PathConstants = PathConstants {
        eps: 0.12,
        c_eps: 0.0096,
        xi: 0.001461,
        c0: 0.2881,
    };

    /// `2 C_ε (1 − ε) / (3√6 (1 + ε)⁴)`, which `xi` rounds.
    pub fn xi_formula(&self) -> f64 {
        2.0 * self.c_eps * (1.0 - self.eps) / (3.0 * 6f64.sqrt() * (1.0 + self.eps).powi(4))
    }
}

/// Below this sphere angle (or above `π − ALPHA_MIN`) `A` and `M` are
/// treated as collinear.
pub const ALPHA_MIN: f64 = 1e-8;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Largest accepted start residual `‖(M − λI)v‖ / (‖M‖_F ‖v‖)`.
pub const START_RESIDUAL_TOL: f64 = 1e-10;

/// Pairwise `pair_dist` below which two refined outputs count as the same
/// eigenpair.
pub const DISTINCT_TOL: f64 = 1e-6;

/// Residual target for the refinement done by `mu_integral_estimate`.
const QUADRATURE_REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomotopyError {
    #[error(transparent)]
    Numlin(#[from] NumlinError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error(transparent)]
    Initial(#[from] InitialError),
    #[error("path-following needs n >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("path is ill-posed at tau = {0}")]
    IllPosed(f64),
}

/// `t(τ)` such that `tA + (1 − t)M` lies at angle `τα` from `M` on the sphere.
///
/// Written as `s·sin(τα) / (s·sin(τα) + r·sin((1 − τ)α))`, which equals the
/// cotangent form and is exact at both endpoints.
pub fn tau_to_t(tau: f64, alpha: f64, r: f64, s: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let num = s * (tau * alpha).sin();
    num / (num + r * ((1.0 - tau) * alpha).sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathOptions {
    pub max_steps: u64,
    pub trace: bool,
    /// Newton steps applied to each output for reporting; the raw output is
    /// kept in `PathResult::zeta` / `w`.
    pub refine_steps: usize,
    /// Run the paths of `all_eigenpairs` on the rayon pool.
    pub parallel: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            max_steps: DEFAULT_MAX_STEPS,
            trace: false,
            refine_steps: 2,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathStatus {
    Converged,
    BudgetExceeded,
    IllPosedEncounter,
    BadInput,
}

impl PathStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathStatus::Converged => "converged",
            PathStatus::BudgetExceeded => "budget_exceeded",
            PathStatus::IllPosedEncounter => "ill_posed_encounter",
            PathStatus::BadInput => "bad_input",
        }
    }
}

impl std::fmt::Display for PathStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One loop iteration. `mu` is evaluated at the triple the step starts
/// from and `delta_tau = ξ/(α μ²)` before clamping; `tau`, `t` and
/// `residual` describe the triple after the Newton step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub tau: f64,
    pub delta_tau: f64,
    pub t: f64,
    pub mu: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub zeta: C64,
    pub w: CVector,
    pub steps_k: u64,
    pub status: PathStatus,
    pub trace: Option<Vec<TraceRecord>>,
    /// `d_S(M, A)`; zero when not computed.
    pub alpha: f64,
    /// Last `τ` reached.
    pub tau: f64,
    /// Index `j` of the start pair `(m_jj, e_j)` when run by a driver.
    pub start_index: Option<usize>,
    /// Set when `A` was collinear with `M` and the start pair was refined
    /// directly instead of followed.
    pub bypassed: bool,
}

impl PathResult {
    fn stopped(zeta: C64, w: CVector, status: PathStatus, alpha: f64) -> Self {
        PathResult {
            zeta,
            w,
            steps_k: 0,
            status,
            trace: None,
            alpha,
            tau: 0.0,
            start_index: None,
            bypassed: false,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == PathStatus::Converged
    }
}

struct Segment<'a> {
    a: &'a CMatrix,
    m: &'a CMatrix,
    r: f64,
    s: f64,
    alpha: f64,
}

impl<'a> Segment<'a> {
    fn at(&self, tau: f64) -> (f64, CMatrix) {
        let t = tau_to_t(tau, self.alpha, self.r, self.s);
        (t, self.a.lerp(self.m, t))
    }
}

enum Checked<'a> {
    Ready(Segment<'a>),
    Collinear(f64),
    Rejected(f64),
}

fn check_inputs<'a>(a: &'a CMatrix, m: &'a CMatrix, lambda: C64, v: &CVector) -> Result<Checked<'a>, HomotopyError> {
    if !a.is_square() {
        return Err(NumlinError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    let n = a.n();
    if m.rows() != n || m.cols() != n || v.len() != n {
        return Err(NumlinError::DimensionMismatch {
            expected: n,
            found: if m.n() != n { m.rows() } else { v.len() },
        }
        .into());
    }
    if n < 2 {
        return Err(HomotopyError::DimensionTooSmall(n));
    }
    let r = a.frobenius_norm();
    let s = m.frobenius_norm();
    if r == 0.0 || s == 0.0 || v.is_zero() || !a.all_finite() || !m.all_finite() {
        return Ok(Checked::Rejected(0.0));
    }
    let alpha = sphere_distance(m, a)?;
    if relative_residual(m, lambda, v) > START_RESIDUAL_TOL {
        return Ok(Checked::Rejected(alpha));
    }
    if alpha < ALPHA_MIN || alpha > std::f64::consts::PI - ALPHA_MIN {
        return Ok(Checked::Collinear(alpha));
    }
    Ok(Checked::Ready(Segment { a, m, r, s, alpha }))
}

/// `σ_min` of the restricted operator at `(Q, ζ, w)` in the frame of `w`.
///
/// Inverse power iteration on `(RᴴR)⁻¹`, warm-started from the previous
/// step's singular vector; falls back to the Jacobi SVD when there is no
/// warm start or the iteration does not settle.
struct SigmaTracker {
    warm: Option<CVector>,
}

const POWER_MAX_ITER: usize = 60;
const POWER_REL_TOL: f64 = 1e-12;

impl SigmaTracker {
    fn new() -> Self {
        SigmaTracker { warm: None }
    }

    fn sigma_min(&mut self, frame: &TangentFrame, q: &CMatrix, zeta: C64) -> f64 {
        let restricted = frame.compress(q, zeta);
        if let Some(sigma) = self.power(frame, &restricted) {
            return sigma;
        }
        let svd = crate::numlin::svd(&restricted);
        let k = svd.singular_values.len();
        let vmin: Vec<C64> = (0..k).map(|i| svd.v[(i, k - 1)]).collect();
        self.warm = Some(frame.to_ambient(&vmin));
        svd.singular_values.last().copied().unwrap_or(0.0)
    }

    fn power(&mut self, frame: &TangentFrame, restricted: &CMatrix) -> Option<f64> {
        let warm = self.warm.take()?;
        let lu = Lu::factor(restricted, 0.0).ok()?;
        let mut x = CVector::new(frame.to_coords(&warm)).normalized().ok()?;
        let mut est = 0.0;
        for it in 0..POWER_MAX_ITER {
            let y = lu.solve_adjoint(&x);
            let next = y.norm_sqr();
            let z = lu.solve(&y);
            if !next.is_finite() || !z.all_finite() {
                return None;
            }
            x = z.normalized().ok()?;
            if it > 0 && (next - est).abs() <= POWER_REL_TOL * next {
                self.warm = Some(frame.to_ambient(x.as_slice()));
                return Some(1.0 / next.sqrt());
            }
            est = next;
        }
        None
    }
}

/// Follows the eigenpair `(λ, v)` of `M` to an approximate eigenpair of `A`.
pub fn path_follow(
    a: &CMatrix,
    m: &CMatrix,
    lambda: C64,
    v: &CVector,
    opts: &PathOptions,
) -> Result<PathResult, HomotopyError> {
    let seg = match check_inputs(a, m, lambda, v)? {
        Checked::Ready(seg) => seg,
        Checked::Collinear(alpha) | Checked::Rejected(alpha) => {
            return Ok(PathResult::stopped(lambda, v.clone(), PathStatus::BadInput, alpha))
        }
    };
    let n = a.n();
    let xi = PathConstants::CERTIFIED.xi;
    let alpha = seg.alpha;

    let mut zeta = lambda;
    let mut w = v.normalized()?;
    let mut q = m.clone();
    let mut tau = 0.0;
    let mut k: u64 = 0;
    let mut trace = if opts.trace { Some(Vec::new()) } else { None };
    let mut sigma = SigmaTracker::new();

    let finish = |zeta, w, k, status, tau, trace| PathResult {
        zeta,
        w,
        steps_k: k,
        status,
        trace,
        alpha,
        tau,
        start_index: None,
        bypassed: false,
    };

    loop {
        if k >= opts.max_steps {
            return Ok(finish(zeta, w, k, PathStatus::BudgetExceeded, tau, trace));
        }
        let frame = TangentFrame::new(&w)?;
        let frob = q.frobenius_norm();
        let report = report_from_sigma(n, frob, sigma.sigma_min(&frame, &q, zeta));
        if !report.well_posed {
            return Ok(finish(zeta, w, k, PathStatus::IllPosedEncounter, tau, trace));
        }
        let mu = report.mu;
        let delta_tau = xi / (alpha * mu * mu);
        tau = (tau + delta_tau).min(1.0);
        let (t, q_next) = seg.at(tau);
        q = q_next;
        let step = newton_step(&q, zeta, &w)?;
        k += 1;
        if !step.applied {
            return Ok(finish(zeta, w, k, PathStatus::IllPosedEncounter, tau, trace));
        }
        zeta = step.lambda;
        w = step.w;
        if let Some(rows) = trace.as_mut() {
            rows.push(TraceRecord {
                step: k,
                tau,
                delta_tau,
                t,
                mu,
                residual: relative_residual(&q, zeta, &w),
            });
        }
        if tau == 1.0 {
            return Ok(finish(zeta, w, k, PathStatus::Converged, tau, trace));
        }
    }
}

/// Composite-trapezoid estimate of `∫₀¹ μ²(Q_τ, λ_τ, v_τ) dτ` along the
/// exact eigenpair path through `(M, λ, v)`.
///
/// The path is sampled at `τ_j = j/nodes`; the pair at each node is carried
/// over from the previous node (with extra intermediate Newton steps where
/// the node spacing exceeds the certified step) and refined to residual
/// `10⁻¹²` before `μ` is evaluated.
pub fn mu_integral_estimate(
    a: &CMatrix,
    m: &CMatrix,
    lambda: C64,
    v: &CVector,
    nodes: usize,
) -> Result<f64, HomotopyError> {
    if nodes == 0 {
        return Err(HomotopyError::BadInput("nodes must be positive".into()));
    }
    let seg = match check_inputs(a, m, lambda, v)? {
        Checked::Ready(seg) => seg,
        Checked::Collinear(alpha) => {
            return Err(HomotopyError::BadInput(format!("A and M are collinear (alpha = {alpha:e})")))
        }
        Checked::Rejected(_) => return Err(HomotopyError::BadInput("start pair is not an eigenpair of M".into())),
    };
    let xi = PathConstants::CERTIFIED.xi;
    let h = 1.0 / nodes as f64;

    let mut zeta = lambda;
    let mut w = v.normalized()?;
    let mut prev_mu2 = mu_squared(m, zeta, &w, 0.0)?;
    let mut sum = 0.5 * prev_mu2;
    for j in 1..=nodes {
        let tau0 = (j - 1) as f64 * h;
        let tau1 = if j == nodes { 1.0 } else { j as f64 * h };
        let certified = xi / (seg.alpha * prev_mu2);
        let sub = (h / certified).ceil().max(1.0) as usize;
        for i in 1..=sub {
            let tau = if i == sub { tau1 } else { tau0 + (tau1 - tau0) * i as f64 / sub as f64 };
            let (_, q) = seg.at(tau);
            let step = newton_step(&q, zeta, &w)?;
            if !step.applied {
                return Err(HomotopyError::IllPosed(tau));
            }
            zeta = step.lambda;
            w = step.w;
        }
        let (_, q) = seg.at(tau1);
        let refined = crate::newton::refine(&q, zeta, &w, QUADRATURE_REFINE_TOL, 20)?;
        if !refined.outcome.applied && refined.outcome.failure.is_some() {
            return Err(HomotopyError::IllPosed(tau1));
        }
        zeta = refined.outcome.lambda;
        w = refined.outcome.w;
        let mu2 = mu_squared(&q, zeta, &w, tau1)?;
        sum += if j == nodes { 0.5 * mu2 } else { mu2 };
        prev_mu2 = mu2;
    }
    Ok(sum * h)
}

fn mu_squared(q: &CMatrix, zeta: C64, w: &CVector, tau: f64) -> Result<f64, HomotopyError> {
    let report = condition::mu(q, zeta, w)?;
    if !report.well_posed {
        return Err(HomotopyError::IllPosed(tau));
    }
    Ok(report.mu * report.mu)
}

fn trivial_result(a: &CMatrix, start_index: usize) -> PathResult {
    PathResult {
        zeta: a[(0, 0)],
        w: CVector::basis(1, 0),
        steps_k: 0,
        status: PathStatus::Converged,
        trace: None,
        alpha: 0.0,
        tau: 1.0,
        start_index: Some(start_index),
        bypassed: true,
    }
}

/// Newton-refines the scaled start pair when `A` is a multiple of `M`.
fn collinear_bypass(a: &CMatrix, sys: &InitialSystem, j: usize, alpha: f64) -> Result<PathResult, HomotopyError> {
    let scale = a.frobenius_inner(&sys.m).re / sys.m.frobenius_norm().powi(2);
    let (z, e) = sys.pair(j);
    let refined = crate::newton::refine(a, z * scale, &e, f64::EPSILON, 3)?;
    let status = if refined.outcome.failure.is_some() {
        PathStatus::IllPosedEncounter
    } else {
        PathStatus::Converged
    };
    Ok(PathResult {
        zeta: refined.outcome.lambda,
        w: refined.outcome.w,
        steps_k: 0,
        status,
        trace: None,
        alpha,
        tau: 1.0,
        start_index: Some(j),
        bypassed: true,
    })
}

fn follow_start(a: &CMatrix, sys: &InitialSystem, j: usize, opts: &PathOptions) -> Result<PathResult, HomotopyError> {
    let (z, e) = sys.pair(j);
    if let Checked::Collinear(alpha) = check_inputs(a, &sys.m, z, &e)? {
        return collinear_bypass(a, sys, j, alpha);
    }
    let mut res = path_follow(a, &sys.m, z, &e, opts)?;
    res.start_index = Some(j);
    Ok(res)
}

fn require_square(a: &CMatrix) -> Result<usize, HomotopyError> {
    if !a.is_square() {
        return Err(NumlinError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    if a.n() == 0 {
        return Err(NumlinError::Empty.into());
    }
    Ok(a.n())
}

/// Follows one uniformly chosen start pair of `M = D_n/‖D_n‖_F` to `A`.
pub fn single_eigenpair<R: Rng + ?Sized>(
    a: &CMatrix,
    rng: &mut R,
    opts: &PathOptions,
) -> Result<PathResult, HomotopyError> {
    let n = require_square(a)?;
    if n == 1 {
        return Ok(trivial_result(a, 0));
    }
    let sys = initial_system(n)?;
    let j = rng.gen_range(0..n);
    follow_start(a, &sys, j, opts)
}

/// Output of [`all_eigenpairs`]: the raw paths in start order and the
/// refined pairs (same order, refined by `opts.refine_steps` Newton steps).
#[derive(Clone, Debug)]
pub struct AllEigenpairs {
    pub paths: Vec<PathResult>,
    pub refined: Vec<Eigenpair>,
    /// Pairwise `pair_dist` of the refined pairs exceeds `DISTINCT_TOL`.
    pub distinct: bool,
}

impl AllEigenpairs {
    pub fn all_converged(&self) -> bool {
        self.paths.iter().all(PathResult::converged)
    }

    /// The refined pairs as an `EigenpairSet` (path order).
    pub fn eigenpair_set(&self) -> EigenpairSet {
        EigenpairSet::new(self.refined.clone())
    }

    pub fn total_steps(&self) -> u64 {
        self.paths.iter().map(|p| p.steps_k).sum()
    }
}

/// Refines a path output with `steps` Newton steps on `A`; returns the pair
/// with its absolute residual `‖Aw − ζw‖` (unit `w`).
pub fn refine_output(a: &CMatrix, path: &PathResult, steps: usize) -> Result<Eigenpair, HomotopyError> {
    let out = newton_iterate(a, path.zeta, &path.w, steps)?;
    let w = out.w.normalized()?;
    let residual = relative_residual(a, out.lambda, &w) * a.frobenius_norm();
    let mut pair = Eigenpair::new(out.lambda, w, residual);
    pair.converged = path.converged() && out.failure.is_none();
    Ok(pair)
}

/// Follows all `n` start pairs of `M` to `A`.
pub fn all_eigenpairs(a: &CMatrix, opts: &PathOptions) -> Result<AllEigenpairs, HomotopyError> {
    let n = require_square(a)?;
    if n == 1 {
        let path = trivial_result(a, 0);
        let refined = vec![Eigenpair::new(a[(0, 0)], CVector::basis(1, 0), 0.0)];
        return Ok(AllEigenpairs {
            paths: vec![path],
            refined,
            distinct: true,
        });
    }
    let sys = initial_system(n)?;
    let run = |j: usize| -> Result<(PathResult, Eigenpair), HomotopyError> {
        let path = follow_start(a, &sys, j, opts)?;
        let pair = refine_output(a, &path, opts.refine_steps)?;
        Ok((path, pair))
    };
    let results: Vec<Result<(PathResult, Eigenpair), HomotopyError>> = if opts.parallel {
        (0..n).into_par_iter().map(run).collect()
    } else {
        (0..n).map(run).collect()
    };
    let mut paths = Vec::with_capacity(n);
    let mut refined = Vec::with_capacity(n);
    for r in results {
        let (p, e) = r?;
        paths.push(p);
        refined.push(e);
    }
    let frob = a.frobenius_norm();
    let mut distinct = true;
    for i in 0..n {
        for j in i + 1..n {
            let d = pair_dist(frob, refined[i].lambda, &refined[i].v, refined[j].lambda, &refined[j].v)?;
            if d <= DISTINCT_TOL {
                distinct = false;
            }
        }
    }
    Ok(AllEigenpairs {
        paths,
        refined,
        distinct,
    })
}

/// `μ(A, λ, v)` for the reported pairs, `∞` where ill-posed.
pub fn output_condition(a: &CMatrix, pair: &Eigenpair) -> f64 {
    if a.n() < 2 {
        return 1.0;
    }
    condition::mu(a, pair.lambda, &pair.v).map(|r| r.mu).unwrap_or(f64::INFINITY)
}

#[doc(hidden)]
pub fn smallest_singular_value_of_restriction(q: &CMatrix, zeta: C64, w: &CVector) -> Result<f64, HomotopyError> {
    let frame = TangentFrame::new(w)?;
    Ok(smallest_singular_value(&frame.compress(q, zeta)))
}
