use eigenflow::homotopy::{mu_integral_estimate, path_follow, refine_output, PathOptions};
use eigenflow::initial::initial_system;
use eigenflow::newton::certify_approximate;
use eigenflow::numlin::projective_distance;
use eigenflow::oracle::{match_pairs, reference_eigenpairs, EigenpairSet};
use eigenflow::random::{centered_gaussian, haar_unitary, stream};
use eigenflow::{all_eigenpairs, mu, single_eigenpair, CMatrix, CVector, PathResult, C64};

/// Certifies the path output against the oracle pair nearest in eigenvalue.
fn certified(a: &CMatrix, r: &PathResult, oracle: &EigenpairSet) -> bool {
    let p = oracle
        .pairs
        .iter()
        .min_by(|x, y| (x.lambda - r.zeta).norm().total_cmp(&(y.lambda - r.zeta).norm()))
        .unwrap();
    certify_approximate(a, r.zeta, &r.w, p.lambda, &p.v).unwrap()
}

fn givens(n: usize, theta: f64) -> CMatrix {
    let mut u = CMatrix::identity(n);
    let (c, s) = (theta.cos(), theta.sin());
    u[(0, 0)] = C64::new(c, 0.0);
    u[(0, 1)] = C64::new(-s, 0.0);
    u[(1, 0)] = C64::new(s, 0.0);
    u[(1, 1)] = C64::new(c, 0.0);
    u
}

#[test]
fn n2_path_is_certified() {
    let sys = initial_system(2).unwrap();
    let a = centered_gaussian(2, 1.0, &mut stream(31, 0));
    let (z, e) = sys.pair(0);
    let r = path_follow(&a, &sys.m, z, &e, &PathOptions::default()).unwrap();
    assert!(r.converged());
    assert!(certified(&a, &r, &reference_eigenpairs(&a).unwrap()));

    let integral = mu_integral_estimate(&a, &sys.m, z, &e, 10_000).unwrap();
    let scale = r.alpha * integral;
    let k = r.steps_k as f64;
    assert!(434.0 * 0.95 * scale - 1.0 <= k && k <= 1077.0 * 1.05 * scale, "K {k}, alpha*I {scale}");
}

#[test]
fn single_eigenpair_n4_is_certified() {
    for seed in 0..5 {
        let mut rng = stream(77, seed);
        let a = centered_gaussian(4, 1.0, &mut rng);
        let r = single_eigenpair(&a, &mut rng, &PathOptions::default()).unwrap();
        assert!(r.converged());
        assert!(certified(&a, &r, &reference_eigenpairs(&a).unwrap()), "seed {seed}");
    }
}

#[test]
fn all_eigenpairs_n4_match_oracle() {
    for seed in 0..5 {
        let a = centered_gaussian(4, 1.0, &mut stream(78, seed));
        let frob = a.frobenius_norm();
        let oracle = reference_eigenpairs(&a).unwrap();
        let all = all_eigenpairs(&a, &PathOptions::default()).unwrap();
        assert!(all.all_converged() && all.distinct);
        for (path, pair) in all.paths.iter().zip(&all.refined) {
            assert!(pair.residual <= 1e-8 * frob);
            assert!(certified(&a, path, &oracle));
        }
        let m = match_pairs(&all.eigenpair_set(), &oracle).unwrap();
        assert!(m.max_distance() <= 1e-6 * frob);
    }
}

#[test]
fn tau_is_clamped_at_one() {
    let sys = initial_system(3).unwrap();
    let a = centered_gaussian(3, 1.0, &mut stream(5, 5));
    let (z, e) = sys.pair(2);
    let opts = PathOptions {
        trace: true,
        ..PathOptions::default()
    };
    let r = path_follow(&a, &sys.m, z, &e, &opts).unwrap();
    let trace = r.trace.unwrap();
    assert_eq!(trace.len() as u64, r.steps_k);
    assert!(trace.iter().all(|t| t.tau <= 1.0));
    assert!(trace.windows(2).all(|w| w[0].tau < w[1].tau));
    assert_eq!(trace.last().unwrap().tau, 1.0);
    assert_eq!(trace.last().unwrap().t, 1.0);
}

#[test]
fn unitary_equivariance() {
    let n = 3;
    let sys = initial_system(n).unwrap();
    for seed in 0..4 {
        let mut rng = stream(90, seed);
        let a = centered_gaussian(n, 1.0, &mut rng);
        let u = haar_unitary(n, &mut rng);
        let (z, e) = sys.pair(seed as usize % n);
        let r1 = path_follow(&a, &sys.m, z, &e, &PathOptions::default()).unwrap();
        let r2 = path_follow(&a.conjugate_by(&u), &sys.m.conjugate_by(&u), z, &u.matvec(&e), &PathOptions::default()).unwrap();
        assert!(r1.converged() && r2.converged());
        assert_eq!(r1.steps_k, r2.steps_k, "seed {seed}");
        assert!((r1.zeta - r2.zeta).norm() <= 1e-8);
        assert!(projective_distance(&u.matvec(&r1.w), &r2.w).unwrap() <= 1e-8);
    }
}

#[test]
fn refined_output_matches_oracle_vector() {
    let a = centered_gaussian(4, 1.0, &mut stream(12, 0));
    let oracle = reference_eigenpairs(&a).unwrap();
    let r = single_eigenpair(&a, &mut stream(12, 1), &PathOptions::default()).unwrap();
    let p = refine_output(&a, &r, 2).unwrap();
    let best = oracle
        .pairs
        .iter()
        .map(|q| projective_distance(&q.v, &p.v).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-8);
}

#[test]
fn integral_converges_under_node_doubling() {
    let sys = initial_system(4).unwrap();
    for seed in 0..2 {
        let a = centered_gaussian(4, 1.0, &mut stream(40, seed));
        let (z, e) = sys.pair(seed as usize);
        let i1 = mu_integral_estimate(&a, &sys.m, z, &e, 10_000).unwrap();
        let i2 = mu_integral_estimate(&a, &sys.m, z, &e, 20_000).unwrap();
        assert!((i1 - i2).abs() <= 1e-3 * i2, "{i1} vs {i2}");
    }
}

#[test]
fn integral_along_near_constant_path() {
    let sys = initial_system(4).unwrap();
    let a = sys.m.conjugate_by(&givens(4, 1e-3));
    for j in 0..4 {
        let (z, e) = sys.pair(j);
        let mu0 = mu(&sys.m, z, &e).unwrap().mu;
        let est = mu_integral_estimate(&a, &sys.m, z, &e, 1_000).unwrap();
        let rel = est / (mu0 * mu0);
        assert!((0.95..=1.05).contains(&rel), "j {j}: ratio {rel}");
    }
}

#[test]
fn integral_is_scale_invariant() {
    let sys = initial_system(3).unwrap();
    let a = centered_gaussian(3, 1.0, &mut stream(41, 0));
    let (z, e) = sys.pair(1);
    let base = mu_integral_estimate(&a, &sys.m, z, &e, 2_000).unwrap();
    for s in [0.01, 3.0, 250.0] {
        let m = sys.m.scale_real(s);
        let scaled = mu_integral_estimate(&a.scale_real(s), &m, z * s, &e, 2_000).unwrap();
        assert!((scaled - base).abs() <= 1e-8 * base, "s {s}: {scaled} vs {base}");
    }
}

#[test]
fn solve_is_deterministic() {
    let a = centered_gaussian(4, 1.0, &mut stream(3, 3));
    let serial = PathOptions {
        parallel: false,
        ..PathOptions::default()
    };
    let x = all_eigenpairs(&a, &PathOptions::default()).unwrap();
    let y = all_eigenpairs(&a, &serial).unwrap();
    assert_eq!(x.paths, y.paths);
    let v: Vec<CVector> = x.refined.iter().map(|p| p.v.clone()).collect();
    let w: Vec<CVector> = y.refined.iter().map(|p| p.v.clone()).collect();
    assert_eq!(v, w);
}
