//! Command-line harness: declarative experiment configs, seeded parallel
//! sweeps, JSON and CSV reports.
//!
//! Exit status: 0 when no cell is `violated`, 1 otherwise, 2 for usage and
//! config errors, 3 for output failures.

pub mod config;
pub mod output;
pub mod runner;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Cell, ConfigError, ExperimentConfig, OutputFormat};
pub use runner::{evaluate_cell, run_with, CellRecord, CellResult, Summary};

use crate::error::Result;
use crate::ineq::{CheckContext, CheckKind, CheckOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OUTPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "epi-lab",
    version,
    about = "Numerically certified entropy-power inequalities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check of an experiment config.
    Run(RunArgs),
    /// List the available checks.
    ListChecks,
    /// Print the statement and acceptance contract of a check.
    DescribeCheck { name: String },
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; defaults to the config's `output.path`, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "EPI_LAB_WORKERS")]
    pub workers: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
}

/// Settings that apply on top of a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            workers: None,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub tol_scale: f64,
    pub records: Vec<CellRecord>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.violated > 0 {
            EXIT_VIOLATED
        } else {
            EXIT_OK
        }
    }

    pub fn write<W: Write>(&self, w: W, format: OutputFormat) -> io::Result<()> {
        match format {
            OutputFormat::Json => output::write_json(
                w,
                &output::RunDocument {
                    schema_version: config::SCHEMA_VERSION,
                    config_echo: output::config_echo(&self.config, self.tol_scale),
                    reports: &self.records,
                    summary: self.summary,
                },
            ),
            OutputFormat::Csv => output::write_csv(w, &self.records),
        }
    }
}

pub fn context_for(config: &ExperimentConfig, tol_scale: f64) -> CheckContext {
    CheckContext {
        tolerances: config.tolerances,
        tol_scale,
        grid: config.grid,
        seed: config.seed,
        ..CheckContext::default()
    }
}

/// Runs a config with a custom cell evaluator.
pub fn execute_with<F>(
    config: &ExperimentConfig,
    opts: RunOptions,
    evaluate: F,
) -> std::result::Result<RunOutcome, ConfigError>
where
    F: Fn(&Cell, &CheckContext) -> Result<CheckOutcome> + Sync,
{
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(ConfigError::Invalid {
            field: "--tol-scale".into(),
            message: format!("{} is not a positive number", opts.tol_scale),
        });
    }
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let cells = config.cells()?;
    let ctx = context_for(&config, opts.tol_scale);
    let records =
        run_with(&cells, &ctx, opts.workers, evaluate).map_err(|e| ConfigError::Invalid {
            field: "--workers".into(),
            message: e.to_string(),
        })?;
    let summary = Summary::of(&records);
    Ok(RunOutcome {
        config,
        tol_scale: opts.tol_scale,
        records,
        summary,
    })
}

pub fn execute(
    config: &ExperimentConfig,
    opts: RunOptions,
) -> std::result::Result<RunOutcome, ConfigError> {
    execute_with(config, opts, evaluate_cell)
}

fn run_command(args: &RunArgs) -> i32 {
    let config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let opts = RunOptions {
        seed: args.seed,
        workers: args.workers,
        tol_scale: args.tol_scale,
    };
    let outcome = match execute(&config, opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let format = args.format.unwrap_or(config.output.format);
    let path = args
        .out
        .clone()
        .or_else(|| config.output.path.as_ref().map(PathBuf::from));
    let written = match &path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            outcome.write(&mut w, format)?;
            w.flush()
        }),
        None => outcome.write(io::stdout().lock(), format),
    };
    if let Err(e) = written {
        let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
        eprintln!("error: writing {target}: {e}");
        return EXIT_OUTPUT;
    }
    for r in &outcome.records {
        if let CellResult::Error { error, .. } = &r.result {
            eprintln!("cell {} ({}): {error}", r.index, r.check);
        }
    }
    eprintln!("{}", outcome.summary.line());
    outcome.exit_code()
}

fn describe(name: &str) -> i32 {
    match name.parse::<CheckKind>() {
        Ok(k) => {
            println!("{k}");
            println!("  statement: {}", k.statement());
            println!("  contract:  {}", k.contract());
            println!("  inputs:    {}", k.input_shape());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn selftest() -> i32 {
    let results = crate::acceptance::run_all();
    for r in &results {
        println!("{r}");
    }
    if results.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    }
}

pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match &cli.command {
        Command::Run(args) => run_command(args),
        Command::ListChecks => {
            for k in CheckKind::ALL {
                println!("{:<22} {}", k.name(), k.input_shape());
            }
            EXIT_OK
        }
        Command::DescribeCheck { name } => describe(name),
        Command::Selftest => selftest(),
    }
}
