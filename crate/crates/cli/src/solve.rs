//! `solve` and `condition` subcommands.

use std::fmt::Write as _;

use eigenflow::homotopy::{output_condition, refine_output, DEFAULT_MAX_STEPS};
use eigenflow::newton::refine;
use eigenflow::numlin::relative_residual;
use eigenflow::oracle::Eigenpair;
use eigenflow::random::stream;
use eigenflow::{all_eigenpairs, mu, single_eigenpair, CMatrix, CVector, PathOptions, PathResult, C64};
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveMode {
    All,
    Single { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub mode: SolveMode,
    /// Keep refining each output until its relative residual is below this.
    pub refine_tol: Option<f64>,
    pub max_steps: u64,
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: SolveMode::All,
            refine_tol: None,
            max_steps: DEFAULT_MAX_STEPS,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PairOut {
    pub lambda: [f64; 2],
    pub v: Vec<[f64; 2]>,
    pub residual: f64,
    /// `null` when the pair is ill-posed.
    pub mu: Option<f64>,
    #[serde(rename = "K")]
    pub k: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SolveOutput {
    pub n: usize,
    pub pairs: Vec<PairOut>,
    pub status: String,
}

pub struct Solved {
    pub output: SolveOutput,
    pub paths: Vec<PathResult>,
}

impl Solved {
    pub fn ok(&self) -> bool {
        self.output.status == "converged"
    }

    /// `path_index,step,tau,delta_tau,t,mu,residual` for every traced step.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("path_index,step,tau,delta_tau,t,mu,residual\n");
        for (idx, p) in self.paths.iter().enumerate() {
            let index = p.start_index.unwrap_or(idx);
            for r in p.trace.iter().flatten() {
                let _ = writeln!(
                    out,
                    "{index},{},{:e},{:e},{:e},{:e},{:e}",
                    r.step, r.tau, r.delta_tau, r.t, r.mu, r.residual
                );
            }
        }
        out
    }
}

fn pair_out(a: &CMatrix, pair: &Eigenpair, k: u64) -> PairOut {
    let mu = output_condition(a, pair);
    PairOut {
        lambda: [pair.lambda.re, pair.lambda.im],
        v: pair.v.iter().map(|z| [z.re, z.im]).collect(),
        residual: pair.residual,
        mu: mu.is_finite().then_some(mu),
        k,
    }
}

fn polish(a: &CMatrix, pair: Eigenpair, tol: Option<f64>) -> Result<Eigenpair, CliError> {
    let Some(tol) = tol else { return Ok(pair) };
    let r = refine(a, pair.lambda, &pair.v, tol, 20).map_err(|e| CliError::numeric(e.to_string()))?;
    let w = r.outcome.w.normalized().map_err(|e| CliError::numeric(e.to_string()))?;
    let residual = relative_residual(a, r.outcome.lambda, &w) * a.frobenius_norm();
    Ok(Eigenpair {
        lambda: r.outcome.lambda,
        v: w,
        residual,
        converged: pair.converged && r.converged,
    })
}

pub fn solve(a: &CMatrix, cfg: &SolveConfig) -> Result<Solved, CliError> {
    let opts = PathOptions {
        max_steps: cfg.max_steps,
        trace: cfg.trace,
        ..PathOptions::default()
    };
    let numeric = |e: eigenflow::homotopy::HomotopyError| CliError::numeric(e.to_string());
    let (paths, pairs, distinct) = match cfg.mode {
        SolveMode::All => {
            let all = all_eigenpairs(a, &opts).map_err(numeric)?;
            (all.paths, all.refined, all.distinct)
        }
        SolveMode::Single { seed } => {
            let path = single_eigenpair(a, &mut stream(seed, 0), &opts).map_err(numeric)?;
            let pair = refine_output(a, &path, opts.refine_steps).map_err(numeric)?;
            (vec![path], vec![pair], true)
        }
    };
    let mut out = Vec::with_capacity(pairs.len());
    for (pair, path) in pairs.into_iter().zip(&paths) {
        let pair = polish(a, pair, cfg.refine_tol)?;
        out.push(pair_out(a, &pair, path.steps_k));
    }
    let status = match paths.iter().find(|p| !p.converged()) {
        Some(p) => p.status.as_str().to_string(),
        None if !distinct => "collision".to_string(),
        None => "converged".to_string(),
    };
    Ok(Solved {
        output: SolveOutput {
            n: a.n(),
            pairs: out,
            status,
        },
        paths,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConditionOut {
    pub mu: Option<f64>,
    pub sigma_min: f64,
    pub well_posed: bool,
    pub frobenius: f64,
    pub residual: f64,
}

pub fn condition(a: &CMatrix, lambda: C64, v: &CVector) -> Result<ConditionOut, CliError> {
    let report = mu(a, lambda, v).map_err(|e| CliError::input(e.to_string()))?;
    Ok(ConditionOut {
        mu: report.mu.is_finite().then_some(report.mu),
        sigma_min: report.sigma_min,
        well_posed: report.well_posed,
        frobenius: report.frobenius,
        residual: relative_residual(a, lambda, v),
    })
}
