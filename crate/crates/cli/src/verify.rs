//! Property suites run by `eigenflow verify <suite>`.
//!
//! Every suite is a deterministic function of its seed and reports one
//! [`Check`] per property.

use std::f64::consts::{FRAC_1_SQRT_2, E};

use eigenflow::condition::{mu_av, mu_normal};
use eigenflow::homotopy::{mu_integral_estimate, path_follow, PathConstants};
use eigenflow::initial::initial_system;
use eigenflow::newton::{newton_step, pair_dist, C0};
use eigenflow::numlin::{riemannian_dist, TangentFrame, Triple};
use eigenflow::oracle::reference_eigenpairs;
use eigenflow::random::{
    centered_gaussian, complex_gaussian, default_truncation, haar_unitary, stream, truncated_centered,
    unit_norm_gaussian, Stream,
};
use eigenflow::{mu, CMatrix, CVector, PathOptions, C64};
use rand::Rng;

use crate::error::CliError;

pub const SUITES: [&str; 7] = [
    "lipschitz",
    "lowerbound",
    "normalformula",
    "mu2bound",
    "ksandwich",
    "newtonquad",
    "truncation",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<Vec<Check>, CliError> {
    match name {
        "lipschitz" => lipschitz(seed, 200),
        "lowerbound" => lowerbound(seed, 1000),
        "normalformula" => normalformula(seed, 100),
        "mu2bound" => mu2bound(seed, 500),
        "ksandwich" => ksandwich(seed, 20),
        "newtonquad" => newtonquad(seed, 100),
        "truncation" => truncation(seed, 10_000),
        other => Err(CliError::input(format!(
            "unknown suite '{other}'; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::numeric(e.to_string())
}

/// Unit vector tangent to `v` at `v`, drawn at random.
fn random_tangent(v: &CVector, rng: &mut Stream) -> Result<CVector, CliError> {
    let frame = TangentFrame::new(v).map_err(numeric)?;
    let coords: Vec<C64> = (0..v.len() - 1).map(|_| complex_gaussian(1.0, rng)).collect();
    frame.to_ambient(&coords).normalized().map_err(numeric)
}

/// `cos(θ)v + sin(θ)t`: the point at projective distance `θ` from unit `v`
/// along the unit tangent `t`.
fn along(v: &CVector, t: &CVector, theta: f64) -> CVector {
    &v.scale_real(theta.cos()) + &t.scale_real(theta.sin())
}

/// Gaussian `n×n` matrix with unit Frobenius norm and one of its oracle
/// eigenpairs; `None` when the oracle flags a cluster.
fn seeded_pair(n: usize, rng: &mut Stream) -> Option<(CMatrix, C64, CVector)> {
    let a = unit_norm_gaussian(n, rng);
    let set = reference_eigenpairs(&a).ok()?;
    if set.clustered || !set.all_converged() {
        return None;
    }
    let j = rng.gen_range(0..n);
    let p = &set.pairs[j];
    Some((a, p.lambda, p.v.clone()))
}

pub fn lipschitz(seed: u64, trials: u64) -> Result<Vec<Check>, CliError> {
    let eps = PathConstants::CERTIFIED.eps;
    let mut worst: f64 = 1.0;
    let mut used = 0;
    for i in 0..trials {
        let mut rng = stream(seed, i);
        let Some((a, lambda, v)) = seeded_pair(5, &mut rng) else { continue };
        let m0 = mu(&a, lambda, &v).map_err(numeric)?.mu;
        // random direction in T_A S × ℂ × T_v, scaled to the admissible radius
        let g = centered_gaussian(5, 1.0, &mut rng);
        let radial = a.frobenius_inner(&g).re;
        let ga = &g - &a.scale_real(radial);
        let ga = ga.scale_real(1.0 / ga.frobenius_norm());
        let gl = complex_gaussian(1.0, &mut rng);
        let gl = gl / gl.norm();
        let t = random_tangent(&v, &mut rng)?;
        let weights = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        let wn = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let radius = eps / 12.5 / m0 * rng.gen_range(0.5..1.0);
        let (da, dl, dv) = (radius * weights[0] / wn, radius * weights[1] / wn, radius * weights[2] / wn);
        let a2 = &a.scale_real(da.cos()) + &ga.scale_real(da.sin());
        let l2 = lambda + gl * dl;
        let v2 = along(&v, &t, dv);
        let t1 = Triple::new(a.clone(), lambda, v.clone()).map_err(numeric)?;
        let t2 = Triple::new(a2.clone(), l2, v2.clone()).map_err(numeric)?;
        let d = riemannian_dist(&t1, &t2).map_err(numeric)?;
        if m0 * d > eps / 12.5 * (1.0 + 1e-12) {
            return Err(CliError::numeric(format!("trial {i}: perturbation exceeds the admissible radius")));
        }
        let m1 = mu(&a2, l2, &v2).map_err(numeric)?.mu;
        let ratio = m1 / m0;
        worst = worst.max(ratio).max(1.0 / ratio);
        used += 1;
    }
    Ok(vec![Check::new(
        "mu ratio within [1/(1+eps), 1+eps]",
        worst <= 1.0 + eps && used > 0,
        format!("{used} trials, worst ratio {worst:.6}, bound {:.2}", 1.0 + eps),
    )])
}

pub fn lowerbound(seed: u64, trials: u64) -> Result<Vec<Check>, CliError> {
    let mut min_mu = f64::INFINITY;
    let mut used = 0;
    for i in 0..trials {
        let mut rng = stream(seed, i);
        let n = 2 + (i % 5) as usize;
        let Some((a, lambda, v)) = seeded_pair(n, &mut rng) else { continue };
        let r = mu(&a, lambda, &v).map_err(numeric)?;
        if r.well_posed {
            min_mu = min_mu.min(r.mu);
            used += 1;
        }
    }
    let bound = FRAC_1_SQRT_2 - 1e-9;
    Ok(vec![Check::new(
        "mu >= 1/sqrt(2)",
        min_mu >= bound && used > 0,
        format!("{used} triples, min mu {min_mu:.9}"),
    )])
}

pub fn normalformula(seed: u64, trials: u64) -> Result<Vec<Check>, CliError> {
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let mut rng = stream(seed, i);
        let n = 2 + (i % 6) as usize;
        let d: Vec<C64> = (0..n).map(|_| complex_gaussian(1.0, &mut rng)).collect();
        let u = haar_unitary(n, &mut rng);
        let a = CMatrix::from_diagonal(&d).conjugate_by(&u);
        let frob = a.frobenius_norm();
        for j in 0..n {
            let v = u.column(j);
            let got = mu(&a, d[j], &v).map_err(numeric)?.mu;
            let want = mu_normal(&d, j, frob);
            worst = worst.max((got - want).abs() / want);
        }
    }
    Ok(vec![Check::new(
        "mu equals the normal-matrix formula",
        worst <= 1e-8,
        format!("{trials} matrices, worst relative error {worst:.3e}"),
    )])
}

/// Sample statistics of `μ_av²(Q)/‖Q‖_F²` for `Q ~ N(center, σ²Id)`.
pub fn mu2_statistic(center: &CMatrix, sigma: f64, seed: u64, samples: u64) -> Result<(f64, f64, usize), CliError> {
    let n = center.n();
    let mut values = Vec::new();
    let mut skipped = 0;
    for i in 0..samples {
        let mut rng = stream(seed, i);
        let q = center + &centered_gaussian(n, sigma, &mut rng);
        let set = reference_eigenpairs(&q).map_err(numeric)?;
        if set.clustered {
            skipped += 1;
            continue;
        }
        let m = mu_av(&q, &set).map_err(numeric)?;
        values.push(m * m / q.frobenius_norm().powi(2));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    let median = if values.len() % 2 == 1 {
        values[values.len() / 2]
    } else {
        0.5 * (values[values.len() / 2 - 1] + values[values.len() / 2])
    };
    Ok((mean, median, skipped))
}

pub fn mu2bound(seed: u64, samples: u64) -> Result<Vec<Check>, CliError> {
    let n = 6;
    let sigma = 1.0;
    let bound = E * n as f64 / (2.0 * sigma * sigma);
    let centers = [
        ("zero center", CMatrix::zeros(n, n)),
        ("unit-norm center", unit_norm_gaussian(n, &mut stream(seed ^ 0xc3, u64::MAX))),
    ];
    let mut checks = Vec::new();
    for (label, center) in centers {
        let (mean, median, skipped) = mu2_statistic(&center, sigma, seed, samples)?;
        checks.push(Check::new(
            &format!("{label}: sample mean <= e*n/(2 sigma^2)"),
            mean <= bound,
            format!("mean {mean:.4}, bound {bound:.3}, {skipped} skipped"),
        ));
        checks.push(Check::new(
            &format!("{label}: sample median <= half the bound"),
            median <= 4.1,
            format!("median {median:.4}, limit 4.1"),
        ));
    }
    Ok(checks)
}

pub fn ksandwich(seed: u64, runs: u64) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for n in [2usize, 4] {
        let sys = initial_system(n).map_err(numeric)?;
        let mut lo_ratio = f64::INFINITY;
        let mut hi_ratio: f64 = 0.0;
        let mut passed = true;
        for i in 0..runs {
            let mut rng = stream(seed, i);
            let a = centered_gaussian(n, 1.0, &mut rng);
            let j = rng.gen_range(0..n);
            let (z, e) = sys.pair(j);
            let res = path_follow(&a, &sys.m, z, &e, &PathOptions::default()).map_err(numeric)?;
            let integral = mu_integral_estimate(&a, &sys.m, z, &e, 10_000).map_err(numeric)?;
            let scale = res.alpha * integral;
            let k = res.steps_k as f64;
            passed &= res.converged() && 434.0 * scale - 1.0 <= k && k <= 1077.0 * 1.05 * scale;
            lo_ratio = lo_ratio.min(k / scale);
            hi_ratio = hi_ratio.max(k / scale);
        }
        checks.push(Check::new(
            &format!("n={n}: 434*alpha*I - 1 <= K <= 1.05*1077*alpha*I"),
            passed,
            format!("{runs} runs, K/(alpha*I) in [{lo_ratio:.1}, {hi_ratio:.1}]"),
        ));
    }
    Ok(checks)
}

/// Fraction of trials whose Newton iterates satisfy the quadratic
/// contraction `d_k ≤ 2^{1−2^k} d_0` (or sit at the roundoff floor) for
/// `k = 1, 2, 3`, starting at distance `0.1·c₀/μ` from an oracle pair.
pub fn newton_contraction_rate(seed: u64, trials: u64) -> Result<(f64, usize), CliError> {
    let n = 6;
    let mut good = 0;
    let mut used = 0;
    for i in 0..trials {
        let mut rng = stream(seed, i);
        let a = centered_gaussian(n, 1.0, &mut rng);
        let set = reference_eigenpairs(&a).map_err(numeric)?;
        if set.clustered {
            continue;
        }
        let p = &set.pairs[rng.gen_range(0..n)];
        let frob = a.frobenius_norm();
        let m = mu(&a, p.lambda, &p.v).map_err(numeric)?.mu;
        let d0 = 0.1 * C0 / m;
        let phi = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
        let dir = complex_gaussian(1.0, &mut rng);
        let t = random_tangent(&p.v, &mut rng)?;
        let mut zeta = p.lambda + dir / dir.norm() * (d0 * phi.cos() * frob);
        let mut w = along(&p.v, &t, d0 * phi.sin());
        let start = pair_dist(frob, zeta, &w, p.lambda, &p.v).map_err(numeric)?;
        let mut ok = true;
        for k in 1..=3u32 {
            let s = newton_step(&a, zeta, &w).map_err(numeric)?;
            zeta = s.lambda;
            w = s.w;
            let dk = pair_dist(frob, zeta, &w, p.lambda, &p.v).map_err(numeric)?;
            let bound = 0.5f64.powi(2i32.pow(k) - 1) * start;
            ok &= dk <= bound.max(1e-14);
        }
        used += 1;
        if ok {
            good += 1;
        }
    }
    Ok((good as f64 / used.max(1) as f64, used))
}

pub fn newtonquad(seed: u64, trials: u64) -> Result<Vec<Check>, CliError> {
    let (rate, used) = newton_contraction_rate(seed, trials)?;
    Ok(vec![Check::new(
        "quadratic contraction from c0/10/mu",
        rate >= 0.95,
        format!("{used} trials, success rate {:.3}", rate),
    )])
}

pub fn truncation(seed: u64, trials: u64) -> Result<Vec<Check>, CliError> {
    let n = 6;
    let t = default_truncation(n);
    let mut attempts = 0usize;
    for i in 0..trials {
        let s = truncated_centered(n, 1.0, t, &mut stream(seed, i)).map_err(numeric)?;
        attempts += s.attempts;
    }
    let rate = trials as f64 / attempts as f64;
    Ok(vec![Check::new(
        "acceptance rate >= 1/2",
        rate >= 0.5,
        format!("{trials} accepted of {attempts} draws, rate {rate:.4}"),
    )])
}
