use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use multiplicity_cli::commands::{self, BalanceArgs, RashomonArgs};
use multiplicity_cli::{exit, parse_config, report, run_experiment, ConfigError, CorrelationUnit, ReportMode, ReportOptions};
use multiplicity_core::filtering::FilterMode;
use multiplicity_core::{LossKind, Method};

#[derive(Parser)]
#[command(name = "multiplicity", version, about = "Class balancing, complexity and Rashomon-set multiplicity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Input {
    /// CSV file with a header row
    csv: PathBuf,
    /// Label column
    #[arg(long)]
    target: String,
    /// Label value treated as the positive (minority) class
    #[arg(long)]
    positive: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the seventeen complexity measures of a dataset
    Complexity {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balance a dataset and write the result as CSV
    Balance {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_named::<Method>)]
        method: Method,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Target majority/minority ratio
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measure distances on raw rather than standardized features
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test each feature against the label and write the per-feature records
    Filter {
        #[command(flatten)]
        input: Input,
        /// none, cor, sig or intersect
        #[arg(long, default_value = "intersect", value_parser = parse_named::<FilterMode>)]
        mode: FilterMode,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model pool and report the Rashomon set's disagreement as JSON
    Rashomon {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 50)]
        pool: usize,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// auc or error
        #[arg(long, default_value = "auc", value_parser = parse_named::<LossKind>)]
        loss: LossKind,
        #[arg(long, default_value_t = 0.25)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.2)]
        validation_fraction: f64,
        /// Count the reference column in obscurity's denominator
        #[arg(long)]
        include_reference: bool,
    },
    /// Group datasets by complexity profile
    Cluster {
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Directory of profile CSVs
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Experiment grid commands
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Summarise a results store
    Report {
        /// JSON-lines results store
        store: PathBuf,
        #[arg(long, value_enum)]
        mode: ReportMode,
        /// Also write the omnibus, post-hoc and correlation tests
        #[arg(long)]
        stats: bool,
        /// Output directory (defaults to `reports` next to the store)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Profile directory for rq6 (defaults to `profiles` next to the store)
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Correlate per grid cell or per dataset
        #[arg(long, value_enum, default_value_t = CorrelationUnit::Record)]
        unit: CorrelationUnit,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run every cell of the grid described by a TOML config
    Run {
        config: PathBuf,
        /// Keep complete groups already in the store and run the rest
        #[arg(long)]
        resume: bool,
    },
}

fn parse_named<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Complexity { input, seed, out } => {
            let ds = commands::load(&input.csv, &input.target, input.positive.as_deref())?;
            commands::complexity(&ds, seed, sink(out.as_deref())?)?;
        }
        Command::Balance { input, method, k, ratio, seed, raw, out } => {
            let ds = commands::load(&input.csv, &input.target, input.positive.as_deref())?;
            let args = BalanceArgs { method, k, ratio, seed, raw };
            let (before, after, ir) = commands::balance_csv(&ds, &input.target, &args, sink(out.as_deref())?)?;
            eprintln!("rows {before} -> {after}, imbalance ratio {ir:.4}");
        }
        Command::Filter { input, mode, alpha, out } => {
            let ds = commands::load(&input.csv, &input.target, input.positive.as_deref())?;
            let kept = commands::filter_csv(&ds, mode, alpha, sink(out.as_deref())?)?;
            eprintln!("{} of {} features selected", kept.len(), ds.n_features());
        }
        Command::Rashomon { input, pool, epsilon, seed, loss, test_fraction, validation_fraction, include_reference } => {
            let ds = commands::load(&input.csv, &input.target, input.positive.as_deref())?;
            let args =
                RashomonArgs { pool, epsilon, seed, loss, test_fraction, validation_fraction, include_reference };
            let summary = commands::rashomon(&ds, &args)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Cluster { k, profiles, seed, out } => {
            commands::cluster(&profiles, k, seed, sink(out.as_deref())?)?;
        }
        Command::Experiment { action: ExperimentAction::Run { config, resume } } => {
            let cfg = parse_config(&config)?;
            eprintln!("{} cells over {} datasets", cfg.n_cells(), cfg.datasets.len());
            let summary = run_experiment(&cfg, resume)?;
            eprintln!("{} records written to {}", summary.n_records, summary.store.display());
            if summary.n_failed > 0 {
                eprintln!("{} cells failed", summary.n_failed);
                return Ok(exit::PARTIAL_FAILURE);
            }
        }
        Command::Report { store, mode, stats, out, profiles, unit } => {
            let opts = ReportOptions { mode, out_dir: out, profiles_dir: profiles, stats, unit };
            for p in report(&store, &opts)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            // a bad config, unreadable dataset or failed command all stop
            // before any grid result exists
            let hint = if e.downcast_ref::<ConfigError>().is_some() { " (check the config file)" } else { "" };
            eprintln!("exiting with status {}{hint}", exit::CONFIG_ERROR);
            ExitCode::from(exit::CONFIG_ERROR as u8)
        }
    }
}
