//! `hetmec`: validate scenario files, solve them, sweep schemes over load
//! scales, analyze robustness and run the grid oracle.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 config or flag error, 3 congested,
//! 4 oracle budget exceeded.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetmec::solver::OracleOptions;
use hetmec::{
    classify_bottleneck, evaluate_insertion, max_supportable_rate, solve_lma_with, sweep, LmaOutcome,
    OracleError, RobustnessOptions, SchemeId, SolveOptions,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("congested")]
    Congested,
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Congested => 3,
            CliError::Budget(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "hetmec", version, about = "Latency-optimal task splitting for multi-layer edge-computing trees")]
struct Cli {
    /// Worker threads; changes wall time only, never output bytes.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print the layer and constraint counts
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Minimize system latency and write the solution JSON
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Relative feasibility tolerance for constraint rows
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Latency and processing rate per scheme over a range of load scales
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "lma,cloud,local,mec")]
        schemes: Vec<SchemeId>,
        #[arg(long)]
        scale_min: f64,
        #[arg(long)]
        scale_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Bisection tolerance for saturation scales
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Maximum supportable load scale, its bottleneck, and optionally the
    /// effect of inserting a server layer
    Robustness {
        #[arg(long)]
        config: PathBuf,
        /// Layer spec, as a file path or inline JSON
        #[arg(long, requires = "position")]
        insert: Option<String>,
        #[arg(long, requires = "insert")]
        position: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Exhaustive grid search over splits, for cross-checking `solve`
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid_step: f64,
        #[arg(long)]
        out: PathBuf,
        /// Maximum number of grid points
        #[arg(long)]
        budget: Option<u64>,
    },
}

fn solve_options(tol: Option<f64>) -> Result<SolveOptions<f64>, CliError> {
    let mut opts = SolveOptions::default();
    if let Some(t) = tol {
        opts.feas_tol = positive("--tol", t)?;
    }
    if let Ok(v) = std::env::var("HETMEC_VERTEX_CAP") {
        opts.vertex_cap = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("HETMEC_VERTEX_CAP: not a subset count: {v:?}")))?;
    }
    Ok(opts)
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{flag} must be positive, got {v}")))
    }
}

fn robustness_options(tol: Option<f64>) -> Result<RobustnessOptions<f64>, CliError> {
    let mut opts = RobustnessOptions {
        solve: solve_options(None)?,
        ..RobustnessOptions::default()
    };
    if let Some(t) = tol {
        opts.tol = positive("--tol", t)?;
    }
    Ok(opts)
}

fn scales(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(min.is_finite() && max.is_finite() && min >= 0.0 && min <= max) {
        return Err(CliError::Config(format!(
            "scale range must satisfy 0 <= --scale-min <= --scale-max, got {min}..{max}"
        )));
    }
    if steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let span = max - min;
    Ok((0..steps)
        .map(|i| if i + 1 == steps { max } else { min + span * i as f64 / (steps - 1) as f64 })
        .collect())
}

fn write_outcome(path: &Path, loaded: &config::Loaded, outcome: &LmaOutcome<f64>, grid_step: Option<f64>) -> Result<(), CliError> {
    match outcome.solution() {
        Some(sol) => {
            if sol.diagnostics.truncated {
                log::warn!("vertex enumeration truncated; the result may be suboptimal");
            }
            output::write(path, output::solution_json(loaded, sol, grid_step).as_bytes())
        }
        None => {
            output::write(path, output::congested_json().as_bytes())?;
            Err(CliError::Congested)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Validate { config } => {
            let loaded = config::load(&config)?;
            print!("{}", output::summary(&loaded));
            Ok(())
        }
        Command::Solve { config, out, tol } => {
            let loaded = config::load(&config)?;
            let opts = solve_options(tol)?;
            let outcome = solve_lma_with(&loaded.topology, &loaded.scenario, &opts);
            write_outcome(&out, &loaded, &outcome, None)
        }
        Command::Sweep {
            config,
            schemes,
            scale_min,
            scale_max,
            steps,
            out,
            tol,
        } => {
            let loaded = config::load(&config)?;
            let scales = scales(scale_min, scale_max, steps)?;
            if schemes.is_empty() {
                return Err(CliError::Config("--schemes is empty".into()));
            }
            let opts = robustness_options(tol)?;
            let rows = sweep(&loaded.topology, &loaded.scenario, &scales, &schemes, &opts);
            output::write(&out, &output::sweep_csv(&rows))
        }
        Command::Robustness {
            config,
            insert,
            position,
            out,
            tol,
        } => {
            let loaded = config::load(&config)?;
            let (t, dir) = (&loaded.topology, &loaded.scenario);
            if !(dir.total_rate() > 0.0) {
                return Err(CliError::Config("eds.lambda_mbps: direction needs a positive rate".into()));
            }
            let opts = robustness_options(tol)?;
            let text = match (insert, position) {
                (Some(arg), Some(k)) => {
                    let spec = config::insertion(&arg, k, t)?;
                    let report = evaluate_insertion(t, &spec, dir, &opts)
                        .map_err(|e| CliError::Config(format!("--insert: {e}")))?;
                    output::robustness_json(dir, report.t_before, &report.bottleneck, Some((k, spec.nodes.len(), &report)))
                }
                _ => {
                    let t_star = max_supportable_rate(t, dir, &opts)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    let report = classify_bottleneck(t, dir, t_star, &opts);
                    output::robustness_json(dir, t_star, &report, None)
                }
            };
            output::write(&out, text.as_bytes())
        }
        Command::Oracle {
            config,
            grid_step,
            out,
            budget,
        } => {
            let loaded = config::load(&config)?;
            let mut opts = OracleOptions::with_step(grid_step);
            if let Some(b) = budget {
                opts.budget = b;
            }
            let outcome = hetmec::solver::oracle_grid_search_with(&loaded.topology, &loaded.scenario, &opts)
                .map_err(|e| match e {
                    OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
                    other => CliError::Config(format!("--grid-step: {other}")),
                })?;
            write_outcome(&out, &loaded, &outcome, Some(grid_step))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetmec: {e}");
            ExitCode::from(e.code())
        }
    }
}
