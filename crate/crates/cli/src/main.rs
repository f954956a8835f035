//! `rrl` — train and backtest recurrent-reinforcement-learning trading
//! agents, run the paired experiment suites, and emit plot-ready CSV panels.

mod config;
mod plotdata;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rrl_core::backtest::{self, report, BacktestError};

/// Exit codes: 0 success, 1 usage, 2 io, 3 numeric.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rrl",
    about = "Recurrent reinforcement learning trading lab",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its backtest report and parameter snapshot.
    Train(TrainArgs),
    /// Run a preset experiment grid and write per-run reports plus summary tables.
    Suite(SuiteArgs),
    /// Emit plot-ready CSV panels (price, signal, equity, objective trace) from a report.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config file (key = value sections); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV price data (timestamp,price); overrides the config's data source.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for the report and snapshot.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Manifest seed; every randomized component derives from it.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Experiment grid: bias | lstm-vs-rrl | ddr-vs-sharpe | paper-v.
    #[arg(long)]
    preset: String,
    /// Base config applied to every cell before the preset's own settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV price data; overrides every cell's data source.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the grid runner (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Report file produced by `train` or `suite`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Which split's panels to emit.
    #[arg(long, default_value = "test")]
    split: String,
}

/// A CLI failure with its machine-readable category.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
    pub code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            category: "usage",
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    fn io(category: &'static str, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
            code: EXIT_IO,
        }
    }

    fn numeric(category: &'static str, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
            code: EXIT_NUMERIC,
        }
    }
}

impl From<BacktestError> for CliError {
    fn from(err: BacktestError) -> Self {
        use rrl_core::timeseries::TimeSeriesError;
        match &err {
            BacktestError::TimeSeries(ts) => match ts {
                TimeSeriesError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                    CliError::io("io.not_found", err.to_string())
                }
                TimeSeriesError::Io(_) => CliError::io("io.read", err.to_string()),
                _ => CliError::io("io.parse", err.to_string()),
            },
            BacktestError::InsufficientData { .. } => {
                CliError::numeric("numeric.insufficient_data", err.to_string())
            }
            BacktestError::Unsupported(_) => CliError::usage(err.to_string()),
            BacktestError::Objective(_) | BacktestError::Optim(_) => {
                CliError::numeric("numeric.degenerate", err.to_string())
            }
            _ => CliError::numeric("numeric.error", err.to_string()),
        }
    }
}

impl From<report::ReportError> for CliError {
    fn from(err: report::ReportError) -> Self {
        match &err {
            report::ReportError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::io("io.not_found", err.to_string())
            }
            report::ReportError::Io(_) => CliError::io("io.write", err.to_string()),
            _ => CliError::io("io.parse", err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::io("io.not_found", err.to_string())
        } else {
            CliError::io("io.write", err.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not failures.
            if err.use_stderr() {
                eprintln!("error: usage: {err}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Suite(args) => cmd_suite(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {}", err.category, err.message);
            ExitCode::from(err.code)
        }
    }
}

fn resolve_config(
    path: Option<&PathBuf>,
    data: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<backtest::ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(path) => config::load_config(path)?,
        None => backtest::ExperimentConfig::new("run"),
    };
    if let Some(data) = data {
        if !data.exists() {
            return Err(CliError::io(
                "io.not_found",
                format!("data file {} does not exist", data.display()),
            ));
        }
        cfg.data = backtest::DataSource::Csv(data.clone());
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = resolve_config(args.config.as_ref(), args.data.as_ref(), args.seed)?;
    let result = backtest::run_one(&cfg).map_err(CliError::from)?;
    let paths = report::write_report_files(&result, &args.out)?;
    println!("report: {}", paths.report.display());
    println!("snapshot: {}", paths.snapshot.display());
    Ok(())
}

fn cmd_suite(args: SuiteArgs) -> Result<(), CliError> {
    let base = resolve_config(args.config.as_ref(), None, args.seed)?;
    let (mut configs, pairs) = presets::build(&args.preset, &base)
        .ok_or_else(|| CliError::usage(format!("unknown preset {:?}", args.preset)))?;
    if configs.is_empty() {
        return Err(CliError::usage("preset produced an empty grid"));
    }
    if let Some(data) = &args.data {
        if !data.exists() {
            return Err(CliError::io(
                "io.not_found",
                format!("data file {} does not exist", data.display()),
            ));
        }
        for cfg in &mut configs {
            cfg.data = backtest::DataSource::Csv(data.clone());
        }
    }

    let run = || backtest::run_experiment_suite(&configs, &pairs);
    let outcome = match args.jobs {
        Some(jobs) if jobs > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::usage(format!("cannot build {jobs}-thread pool: {e}")))?
            .install(run),
        _ => run(),
    };

    std::fs::create_dir_all(&args.out)?;
    for report_data in outcome.reports.iter().flatten() {
        let paths = report::write_report_files(report_data, &args.out)?;
        println!("report: {}", paths.report.display());
    }
    std::fs::write(
        args.out.join("summary.csv"),
        report::render_summary(&outcome),
    )?;
    std::fs::write(
        args.out.join("comparisons.csv"),
        report::render_comparisons(&outcome.comparisons),
    )?;
    println!("summary: {}", args.out.join("summary.csv").display());

    if !outcome.failures.is_empty() {
        for (label, err) in &outcome.failures {
            eprintln!("cell {label} failed: {err}");
        }
        return Err(CliError::numeric(
            "numeric.cell_failure",
            format!("{} of {} cells failed", outcome.failures.len(), configs.len()),
        ));
    }
    Ok(())
}

fn cmd_plotdata(args: PlotArgs) -> Result<(), CliError> {
    if args.split != "test" && args.split != "train" {
        return Err(CliError::usage("--split must be `test` or `train`"));
    }
    let parsed = report::read_report(&args.report)?;
    plotdata::emit(&parsed, &args.split, &args.out)
}
