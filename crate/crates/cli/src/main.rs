//! `extremal`: regularity thresholds, branch tracing, extremal curves,
//! proof probes and the singular-solution scan from the command line.
//!
//! Exit codes: 0 success, 1 usage/config/solver error, 2 inadmissible
//! regularity result.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{parse_csv, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] extremal_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser)]
#[command(name = "extremal", version, about = "Extremal solutions of coupled Gelfand-type systems on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convexity bounds, root alpha* and dimension threshold N(f).
    Regularity(Common),
    /// Minimal branches up to the fold, one CSV row per accepted point.
    Trace(Common),
    /// Fold parameters (lambda*, gamma*) for each sigma.
    ExtremalCurve(Common),
    /// Integral probes on the minimal solution at (lambda, gamma).
    Probe(Common),
    /// Stability of the singular pair u = v = -2 ln r across dimensions.
    SingularScan(Common),
}

/// A comma-separated list of reals given as one flag value.
#[derive(Clone, Debug)]
struct RealList(Vec<f64>);

fn csv_arg(s: &str) -> Result<RealList, String> {
    parse_csv(s).map(RealList)
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Flat JSON configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// exp, pow:<p> or exppow:<a>.
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long)]
    dim: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    /// Single value or comma-separated list.
    #[arg(long, value_parser = csv_arg)]
    sigma: Option<RealList>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_parser = csv_arg)]
    alphas: Option<RealList>,
    #[arg(long, value_parser = csv_arg)]
    epsilons: Option<RealList>,
    /// Dimensions for singular-scan.
    #[arg(long = "n-values", value_parser = csv_arg)]
    n_values: Option<RealList>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let over = Overrides {
            nonlinearity: self.nonlinearity,
            dim: self.dim,
            cells: self.cells,
            sigma: self.sigma.map(|l| l.0),
            lambda: self.lambda,
            gamma: self.gamma,
            alphas: self.alphas.map(|l| l.0),
            epsilons: self.epsilons.map(|l| l.0),
            n_values: self.n_values.map(|l| l.0),
            seed: self.seed,
            out: self.out,
        };
        RunConfig::load(self.config.as_deref(), over)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Regularity(c) => commands::regularity(&c.resolve()?),
        Command::Trace(c) => commands::trace(&c.resolve()?),
        Command::ExtremalCurve(c) => commands::extremal_curve_cmd(&c.resolve()?),
        Command::Probe(c) => commands::probe(&c.resolve()?),
        Command::SingularScan(c) => commands::singular_scan(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
