mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::commands::{DiagnoseArgs, EstimateArgs, HedgeArgs, PriceArgs, ReportArgs, SimulateArgs};

/// Version of every JSON document this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "bn-pricer",
    version,
    about = "Benchmark-neutral bond pricing and hedging under the minimal market model"
)]
struct Cli {
    /// Directory for JSON summaries and CSV files
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Master seed for all random streams
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the activity-time trendline to an index series
    Estimate(EstimateArgs),
    /// Price a zero-coupon bond
    Price(PriceArgs),
    /// Backtest the bond hedge along an index series
    Hedge(HedgeArgs),
    /// Simulate stock GOP paths
    Simulate(SimulateArgs),
    /// Martingale and supermartingale diagnostics of the pricing measures
    Diagnose(DiagnoseArgs),
    /// Fit, price and hedge in one run and write the figure data
    Report(ReportArgs),
}

#[derive(Debug)]
pub enum CliError {
    Core(bn_pricer_core::Error),
    Config(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config(_) => "io_cli.config",
            CliError::Io(_) => "io.io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<bn_pricer_core::Error> for CliError {
    fn from(e: bn_pricer_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

pub struct Context {
    pub out: output::OutputDir,
    pub seed: u64,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BN_PRICER_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BN_PRICER_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let ctx = Context {
        out: output::OutputDir::create(cli.output_dir)?,
        seed: cli.seed,
    };
    match cli.command {
        Command::Estimate(args) => commands::estimate(&ctx, &args),
        Command::Price(args) => commands::price(&ctx, &args),
        Command::Hedge(args) => commands::hedge(&ctx, &args),
        Command::Simulate(args) => commands::simulate(&ctx, &args),
        Command::Diagnose(args) => commands::diagnose(&ctx, &args),
        Command::Report(args) => commands::report(&ctx, &args),
    }
}

fn main() -> ExitCode {
    let parsed = Cli::try_parse().map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            e.exit()
        }
        _ => CliError::Config(e.to_string().trim_end().to_string()),
    });
    match parsed.and_then(run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport {
                schema_version: SCHEMA_VERSION,
                error: ErrorBody {
                    code: e.code(),
                    message: e.to_string(),
                },
            };
            eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
            ExitCode::FAILURE
        }
    }
}
