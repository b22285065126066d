//! Average-case and smoothed iteration-count experiments.

use std::fmt::Write as _;
use std::time::Instant;

use eigenflow::initial::{initial_condition_numbers, initial_system};
use eigenflow::numlin::relative_residual;
use eigenflow::random::{centered_gaussian, default_truncation, stream, trial_seed, truncated_centered};
use eigenflow::{all_eigenpairs, single_eigenpair, CMatrix, PathOptions, PathResult, PathStatus};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

pub const CSV_HEADER: &str = "seed,n,sigma,path_index,K,status,final_residual,wall_ms";

#[derive(Clone, Debug)]
pub enum Ensemble {
    /// `A ~ N(0, σ²Id)`.
    Average,
    /// `A = Ā + G`, `G ~ N_T(0, σ²Id)`, `T = √2·n`, with `‖Ā‖_F = 1`.
    /// Without an explicit center, `Ā = D_n/‖D_n‖_F`.
    Smoothed { center: Option<CMatrix> },
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub all: bool,
    pub jobs: Option<usize>,
    pub wall_time: bool,
    pub max_steps: u64,
    pub ensemble: Ensemble,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    /// Sub-seed of the trial; `stream(seed, 0)` replays it.
    pub seed: u64,
    pub n: usize,
    pub sigma: f64,
    pub trial: u64,
    pub path_index: usize,
    pub k: u64,
    pub status: PathStatus,
    pub final_residual: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GroupSummary {
    pub n: usize,
    pub sigma: f64,
    pub trials: u64,
    pub paths: usize,
    pub mean_k: f64,
    pub median_k: f64,
    /// Mean over trials of the total `K` of the trial (one path in single
    /// mode, all `n` paths otherwise).
    pub mean_num_iter: f64,
    pub failures: usize,
    pub mu_max_of_m: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SigmaTrend {
    pub n: usize,
    pub sigmas: Vec<f64>,
    pub mean_num_iter: Vec<f64>,
    /// Mean iteration count does not increase as `σ` grows.
    pub non_increasing_in_sigma: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub experiment: String,
    pub mode: String,
    pub seed: u64,
    pub trials: u64,
    pub groups: Vec<GroupSummary>,
    /// Least-squares slope of `ln mean_num_iter` against `ln n`, per `σ`.
    pub loglog_slope: Vec<(f64, Option<f64>)>,
    pub sigma_trend: Vec<SigmaTrend>,
    pub failures: usize,
    pub notices: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let wall = r.wall_ms.map_or_else(|| "NA".to_string(), |w| format!("{w:.3}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{}",
                r.seed, r.n, r.sigma, r.path_index, r.k, r.status, r.final_residual, wall
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serialises") + "\n"
    }
}

fn normalized_center(center: &CMatrix, n: usize) -> Result<CMatrix, CliError> {
    if center.n() != n {
        return Err(CliError::input(format!("center is {}x{0}, but n = {n} was requested", center.n())));
    }
    let norm = center.frobenius_norm();
    if norm == 0.0 {
        return Err(CliError::input("center matrix is zero and cannot be normalized"));
    }
    Ok(center.scale_real(1.0 / norm))
}

struct TrialOutcome {
    rows: Vec<BenchRow>,
}

fn path_row(a: &CMatrix, p: &PathResult, base: &BenchRow) -> BenchRow {
    // residual of the raw path output; the refined pair is not reported here
    let final_residual = if p.w.is_zero() {
        f64::INFINITY
    } else {
        relative_residual(a, p.zeta, &p.w)
    };
    BenchRow {
        path_index: p.start_index.unwrap_or(0),
        k: p.steps_k,
        status: p.status,
        final_residual,
        ..base.clone()
    }
}

fn run_trial(
    cfg: &BenchConfig,
    center: Option<&CMatrix>,
    n: usize,
    sigma: f64,
    trial: u64,
) -> Result<TrialOutcome, CliError> {
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = stream(seed, 0);
    let a = match center {
        None => centered_gaussian(n, sigma, &mut rng),
        Some(c) => {
            let g = truncated_centered(n, sigma, default_truncation(n), &mut rng)
                .map_err(|e| CliError::numeric(format!("sampler failed in trial {trial}: {e}")))?;
            c + &g.matrix
        }
    };
    let opts = PathOptions {
        max_steps: cfg.max_steps,
        parallel: false,
        ..PathOptions::default()
    };
    let start = Instant::now();
    let base = BenchRow {
        seed,
        n,
        sigma,
        trial,
        path_index: 0,
        k: 0,
        status: PathStatus::BadInput,
        final_residual: f64::NAN,
        wall_ms: None,
    };
    let numeric = |e: eigenflow::homotopy::HomotopyError| CliError::numeric(format!("trial {trial}: {e}"));
    let mut rows: Vec<BenchRow> = if cfg.all {
        let all = all_eigenpairs(&a, &opts).map_err(numeric)?;
        all.paths.iter().map(|p| path_row(&a, p, &base)).collect()
    } else {
        let p = single_eigenpair(&a, &mut rng, &opts).map_err(numeric)?;
        vec![path_row(&a, &p, &base)]
    };
    if cfg.wall_time {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for r in rows.iter_mut() {
            r.wall_ms = Some(ms);
        }
    }
    Ok(TrialOutcome { rows })
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mx = mean(&points.iter().map(|p| p.0).collect::<Vec<_>>());
    let my = mean(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn summarize(cfg: &BenchConfig, rows: &[BenchRow], notices: Vec<String>) -> Result<Summary, CliError> {
    let mut groups = Vec::new();
    for &n in &cfg.ns {
        let mu_max_of_m = if n >= 2 {
            initial_condition_numbers(n)
                .map_err(|e| CliError::input(e.to_string()))?
                .into_iter()
                .fold(0.0, f64::max)
        } else {
            1.0
        };
        for &sigma in &cfg.sigmas {
            let g: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n && r.sigma == sigma).collect();
            let ks: Vec<f64> = g.iter().map(|r| r.k as f64).collect();
            let per_trial: Vec<f64> = (0..cfg.trials)
                .map(|t| g.iter().filter(|r| r.trial == t).map(|r| r.k as f64).sum())
                .collect();
            groups.push(GroupSummary {
                n,
                sigma,
                trials: cfg.trials,
                paths: g.len(),
                mean_k: mean(&ks),
                median_k: median(ks),
                mean_num_iter: mean(&per_trial),
                failures: g.iter().filter(|r| r.status != PathStatus::Converged).count(),
                mu_max_of_m,
            });
        }
    }
    let loglog_slope = cfg
        .sigmas
        .iter()
        .map(|&sigma| {
            let pts: Vec<(f64, f64)> = groups
                .iter()
                .filter(|g| g.sigma == sigma && g.mean_num_iter > 0.0)
                .map(|g| ((g.n as f64).ln(), g.mean_num_iter.ln()))
                .collect();
            (sigma, slope(&pts))
        })
        .collect();
    let sigma_trend = if matches!(cfg.ensemble, Ensemble::Smoothed { .. }) && cfg.sigmas.len() > 1 {
        cfg.ns
            .iter()
            .map(|&n| {
                let mut pts: Vec<(f64, f64)> = groups
                    .iter()
                    .filter(|g| g.n == n)
                    .map(|g| (g.sigma, g.mean_num_iter))
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                SigmaTrend {
                    n,
                    non_increasing_in_sigma: pts.windows(2).all(|w| w[1].1 <= w[0].1),
                    sigmas: pts.iter().map(|p| p.0).collect(),
                    mean_num_iter: pts.iter().map(|p| p.1).collect(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Summary {
        experiment: match cfg.ensemble {
            Ensemble::Average => "average".into(),
            Ensemble::Smoothed { .. } => "smoothed".into(),
        },
        mode: if cfg.all { "all".into() } else { "single".into() },
        seed: cfg.seed,
        trials: cfg.trials,
        failures: rows.iter().filter(|r| r.status != PathStatus::Converged).count(),
        groups,
        loglog_slope,
        sigma_trend,
        notices,
    })
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport, CliError> {
    if cfg.trials == 0 {
        return Err(CliError::input("trials must be at least 1"));
    }
    if cfg.ns.is_empty() || cfg.ns.iter().any(|&n| n < 2) {
        return Err(CliError::input("every n must be at least 2"));
    }
    if cfg.sigmas.is_empty() || cfg.sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(CliError::input("every sigma must be positive"));
    }
    let mut notices = Vec::new();
    let mut centers = Vec::new();
    for &n in &cfg.ns {
        centers.push(match &cfg.ensemble {
            Ensemble::Average => None,
            Ensemble::Smoothed { center: Some(c) } => {
                if (c.frobenius_norm() - 1.0).abs() > 1e-12 && n == cfg.ns[0] {
                    notices.push(format!(
                        "center rescaled from Frobenius norm {} to 1",
                        c.frobenius_norm()
                    ));
                }
                Some(normalized_center(c, n)?)
            }
            Ensemble::Smoothed { center: None } => {
                let m = initial_system(n).map_err(|e| CliError::input(e.to_string()))?.m;
                Some(m)
            }
        });
    }

    let mut jobs = Vec::new();
    for (ni, &n) in cfg.ns.iter().enumerate() {
        for &sigma in &cfg.sigmas {
            for t in 0..cfg.trials {
                jobs.push((ni, n, sigma, t));
            }
        }
    }
    let work = |&(ni, n, sigma, t): &(usize, usize, f64, u64)| run_trial(cfg, centers[ni].as_ref(), n, sigma, t);
    let outcomes: Vec<Result<TrialOutcome, CliError>> = match cfg.jobs {
        Some(1) => jobs.iter().map(work).collect(),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::input(format!("cannot start {threads} workers: {e}")))?;
            pool.install(|| jobs.par_iter().map(work).collect())
        }
        None => jobs.par_iter().map(work).collect(),
    };
    let mut rows = Vec::new();
    for o in outcomes {
        rows.extend(o?.rows);
    }
    let summary = summarize(cfg, &rows, notices)?;
    Ok(BenchReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(all: bool) -> BenchConfig {
        BenchConfig {
            ns: vec![2, 3],
            sigmas: vec![1.0],
            trials: 3,
            seed: 5,
            all,
            jobs: Some(1),
            wall_time: false,
            max_steps: 1_000_000,
            ensemble: Ensemble::Average,
        }
    }

    #[test]
    fn rows_and_summary_agree() {
        let rep = run(&cfg(true)).unwrap();
        assert_eq!(rep.rows.len(), 3 * 2 + 3 * 3);
        let g = &rep.summary.groups[1];
        let ks: Vec<f64> = rep.rows.iter().filter(|r| r.n == 3).map(|r| r.k as f64).collect();
        assert!((g.mean_k - mean(&ks)).abs() < 1e-9);
        assert!((g.mean_num_iter - 3.0 * g.mean_k).abs() < 1e-6);
        assert!(rep.csv().starts_with(CSV_HEADER));
        assert!(rep.csv().lines().nth(1).unwrap().ends_with(",NA"));
    }

    #[test]
    fn trial_seeds_shared_across_n() {
        let rep = run(&cfg(false)).unwrap();
        let s2: Vec<u64> = rep.rows.iter().filter(|r| r.n == 2).map(|r| r.seed).collect();
        let s3: Vec<u64> = rep.rows.iter().filter(|r| r.n == 3).map(|r| r.seed).collect();
        assert_eq!(s2, s3);
    }

    #[test]
    fn parallel_matches_serial() {
        let serial = run(&cfg(false)).unwrap().csv();
        let mut c = cfg(false);
        c.jobs = Some(2);
        assert_eq!(run(&c).unwrap().csv(), serial);
    }

    #[test]
    fn zero_center_is_input_error() {
        let mut c = cfg(false);
        c.ns = vec![2];
        c.ensemble = Ensemble::Smoothed {
            center: Some(CMatrix::zeros(2, 2)),
        };
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0].iter().map(|&n| (n.ln(), 3.0 * n.ln() + 1.0)).collect();
        assert!((slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
