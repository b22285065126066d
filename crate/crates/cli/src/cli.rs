use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchConfig, Ensemble};
use crate::error::CliError;
use crate::input::{parse_triple, read_matrix, read_text};
use crate::solve::{self, SolveConfig, SolveMode};
use crate::verify;
use eigenflow::homotopy::DEFAULT_MAX_STEPS;

#[derive(Debug, Parser)]
#[command(name = "eigenflow", version, about = "Eigenpairs by certified homotopy continuation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the matrix in a JSON file; prints the eigenpairs as JSON.
    Solve(SolveArgs),
    /// Iteration counts for Gaussian matrices N(0, sigma^2 Id).
    BenchAvg(BenchArgs),
    /// Iteration counts for truncated Gaussian perturbations of a unit-norm center.
    BenchSmoothed(SmoothedArgs),
    /// Run a named property suite.
    Verify(VerifyArgs),
    /// Condition number of the triple in a JSON file.
    Condition(ConditionArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Base seed [env: EIGENFLOW_SEED; default 0]
    #[arg(long, env = "EIGENFLOW_SEED", default_value_t = 0, hide_env = true)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    /// Follow all n start pairs (default).
    #[arg(long, conflicts_with = "single")]
    pub all: bool,
    /// Follow one randomly chosen start pair.
    #[arg(long)]
    pub single: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Refine each output until its relative residual is below this value.
    #[arg(long)]
    pub refine_tol: Option<f64>,
    /// Write the per-step trace as CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the JSON to this path instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub trials: u64,
    /// Comma-separated standard deviations.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma: Vec<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Follow all n paths per matrix instead of one random path.
    #[arg(long, conflicts_with = "single")]
    pub all: bool,
    #[arg(long)]
    pub single: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall-clock times (output is then no longer reproducible).
    #[arg(long)]
    pub wall_time: bool,
    /// Write the CSV here and the JSON summary next to it (`.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct SmoothedArgs {
    /// Center matrix file; defaults to the normalized start matrix for each n.
    #[arg(long)]
    pub center: Option<PathBuf>,
    /// Comma-separated dimensions; defaults to the center's dimension.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma: Vec<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, conflicts_with = "single")]
    pub all: bool,
    #[arg(long)]
    pub single: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub wall_time: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One of: lipschitz, lowerbound, normalformula, mu2bound, ksandwich, newtonquad, truncation.
    pub suite: String,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    pub file: PathBuf,
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serialises") + "\n"
}

fn cmd_solve(args: SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let a = read_matrix(&args.file)?;
    if let Some(tol) = args.refine_tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::input("--refine-tol must be positive"));
        }
    }
    let cfg = SolveConfig {
        mode: if args.single {
            SolveMode::Single { seed: args.seed.seed }
        } else {
            SolveMode::All
        },
        refine_tol: args.refine_tol,
        max_steps: args.max_steps,
        trace: args.trace.is_some(),
    };
    let solved = solve::solve(&a, &cfg)?;
    if let Some(path) = &args.trace {
        std::fs::write(path, solved.trace_csv())?;
    }
    write_or_print(args.out.as_deref(), &to_json(&solved.output), out)?;
    if solved.ok() {
        Ok(())
    } else {
        Err(CliError::numeric(format!("solve finished with status {}", solved.output.status)))
    }
}

fn emit_bench(report: &bench::BenchReport, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, report.csv())?;
            std::fs::write(p.with_extension("json"), report.summary_json())?;
        }
        None => {
            out.write_all(report.csv().as_bytes())?;
            err.write_all(report.summary_json().as_bytes())?;
        }
    }
    for notice in &report.summary.notices {
        writeln!(err, "notice: {notice}")?;
    }
    Ok(())
}

fn cmd_bench(cfg: BenchConfig, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if cfg.jobs == Some(0) {
        return Err(CliError::input("--jobs must be at least 1"));
    }
    let report = bench::run(&cfg)?;
    emit_bench(&report, path, out, err)
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = verify::run_suite(&args.suite, args.seed.seed)?;
    let mut failed = 0;
    for c in &checks {
        writeln!(out, "{} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, args.suite, c.name, c.detail)?;
        if !c.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::numeric(format!("{failed} check(s) failed in suite {}", args.suite)))
    }
}

fn cmd_condition(args: ConditionArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, lambda, v) = parse_triple(&read_text(&args.file)?)?;
    let report = solve::condition(&a, lambda, &v)?;
    out.write_all(to_json(&report).as_bytes())?;
    Ok(())
}

pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args, out),
        Command::BenchAvg(a) => {
            let cfg = BenchConfig {
                ns: a.n,
                sigmas: a.sigma,
                trials: a.trials,
                seed: a.seed.seed,
                all: a.all,
                jobs: a.jobs,
                wall_time: a.wall_time,
                max_steps: a.max_steps,
                ensemble: Ensemble::Average,
            };
            cmd_bench(cfg, a.out.as_deref(), out, err)
        }
        Command::BenchSmoothed(a) => {
            let center = a.center.as_deref().map(read_matrix).transpose()?;
            let ns = match (&center, a.n.is_empty()) {
                (Some(c), true) => vec![c.n()],
                (None, true) => return Err(CliError::input("--n is required without --center")),
                _ => a.n,
            };
            let cfg = BenchConfig {
                ns,
                sigmas: a.sigma,
                trials: a.trials,
                seed: a.seed.seed,
                all: a.all,
                jobs: a.jobs,
                wall_time: a.wall_time,
                max_steps: a.max_steps,
                ensemble: Ensemble::Smoothed { center },
            };
            cmd_bench(cfg, a.out.as_deref(), out, err)
        }
        Command::Verify(args) => cmd_verify(args, out),
        Command::Condition(args) => cmd_condition(args, out),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(err, "{}", e.render());
            if !e.use_stderr() {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
