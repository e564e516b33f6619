mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Optimal active/passive allocation and Monte Carlo backtesting.
///
/// Every command accepts `--config FILE` with the same settings as JSON (or a
/// manifest from a previous run); flags given on the command line win. The
/// worker thread count can be set with the OPTRACK_THREADS environment variable.
#[derive(Debug, Parser)]
#[command(name = "optrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate market parameters from with- and ex-dividend return files.
    Estimate(EstimateOpts),
    /// Compute optimal weights and diagnostics at one state.
    Allocate(AllocateOpts),
    /// Simulate paths and evaluate strategies. Without --strategies this runs
    /// the preference-grid sweep.
    Simulate(SimulateOpts),
    /// Preference-grid sweep; --strategies lists the reference strategies.
    Sweep(SimulateOpts),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateOpts {
    /// JSON settings file or previous manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Returns including dividends.
    #[arg(long)]
    pub with_div: Option<PathBuf>,
    /// Returns excluding dividends.
    #[arg(long)]
    pub ex_div: Option<PathBuf>,
    /// Firm counts and average firm sizes (or capitalizations) for initial values.
    #[arg(long)]
    pub sizes: Option<PathBuf>,
    /// First period to include, e.g. 200501.
    #[arg(long)]
    pub from: Option<u64>,
    /// Last period to include, e.g. 201707.
    #[arg(long)]
    pub to: Option<u64>,
    /// Years per row.
    #[arg(long)]
    pub period_length: Option<f64>,
    /// Cells are plain decimals rather than percent.
    #[arg(long)]
    pub decimal: bool,
    /// Covariance denominator: unbiased (T-1) or population (T).
    #[arg(long)]
    pub denominator: Option<String>,
    /// Output parameter file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Estimation report; defaults next to the parameter file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Run manifest; defaults next to the parameter file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocateOpts {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Market parameter file; the built-in five-industry market when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Preferences as `zeta0,zeta1,zeta2`.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<String>,
    /// Absolute penalty: covariance, identity, variances, diagonal:..., matrix:...
    #[arg(long)]
    pub q: Option<String>,
    /// Performance benchmark: market, equal, risk-parity, constant:...
    #[arg(long)]
    pub rho: Option<String>,
    /// Tracking portfolio: market, equal, risk-parity, constant:...
    #[arg(long)]
    pub eta: Option<String>,
    /// Asset values, comma separated; equal values when absent.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Flag weights larger than this in magnitude.
    #[arg(long)]
    pub weight_warning: Option<f64>,
    /// Write the diagnostics here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOpts {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Market parameter file; the built-in five-industry market when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Years per step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Years; derived from steps and dt when absent.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Criterion preferences `zeta0,zeta1,zeta2`; also adds the optimal
    /// strategy when --strategies is given.
    #[arg(long)]
    pub zeta: Option<String>,
    /// Sweep values of zeta0, comma separated, or `standard`.
    #[arg(long)]
    pub zeta0: Option<String>,
    /// Sweep values of zeta1, comma separated, or `standard`.
    #[arg(long)]
    pub zeta1: Option<String>,
    /// Sweep values of zeta2, comma separated, or `standard`.
    #[arg(long)]
    pub zeta2: Option<String>,
    /// Comma separated: gop, mqp, market, equal, risk-parity, optimal:z0/z1/z2.
    #[arg(long)]
    pub strategies: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    /// Initial asset values, comma separated.
    #[arg(long)]
    pub x0: Option<String>,
    /// Take initial values from an estimation report.
    #[arg(long)]
    pub x0_from: Option<PathBuf>,
    /// Penalty scaling: printed or halved.
    #[arg(long)]
    pub convention: Option<String>,
    /// per-step-mean or annualized-mean.
    #[arg(long)]
    pub risk_estimator: Option<String>,
    /// Directory for metrics.csv, metrics.json and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Include per-path records in metrics.json (non-sweep runs).
    #[arg(long)]
    pub include_paths: bool,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("OPTRACK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| anyhow::anyhow!("OPTRACK_THREADS must be a positive integer, got {value:?}"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("configuring thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Estimate(o) => commands::estimate(&o),
        Command::Allocate(o) => commands::allocate(&o),
        Command::Simulate(o) => commands::simulate(&o, false),
        Command::Sweep(o) => commands::simulate(&o, true),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
