//! `trialspace` command-line front end.
//!
//! Exit codes: 0 ok, 2 validation error, 3 I/O error, 4 resource cap exceeded.

mod builtin;
mod config;
mod dag;
mod error;
mod exact;
mod output;
mod simulate;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "trialspace",
    version,
    about = "Finite-population trials, exact oracles and DAG models"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path: a directory for `simulate`, a file otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run observational samples or randomized trials.
    #[command(subcommand)]
    Simulate(simulate::SimulateCommand),
    /// Exact enumeration and hypergeometric checks.
    #[command(subcommand)]
    Exact(exact::ExactCommand),
    /// Contingency tables and stratification.
    #[command(subcommand)]
    Tables(tables::TablesCommand),
    /// Binary DAG models.
    #[command(subcommand)]
    Dag(dag::DagCommand),
    /// Built-in reproductions: example1, appendix, cancellation.
    Builtin { name: String },
}

pub struct Context {
    pub config: ScenarioConfig,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Context {
    fn new(global: GlobalArgs) -> CliResult<Self> {
        let config = match &global.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        let out = global
            .out
            .or_else(|| config.output.as_ref().and_then(|o| o.path.clone()));
        let format = match global.format {
            Some(f) => Some(f),
            None => match config.output.as_ref().and_then(|o| o.format.as_deref()) {
                None => None,
                Some("csv") => Some(Format::Csv),
                Some("json") => Some(Format::Json),
                Some(other) => {
                    return Err(CliError::Validation(format!(
                        "unknown output format `{other}`"
                    )))
                }
            },
        };
        Ok(Self {
            seed: global.seed.or(config.seed),
            out,
            format,
            config,
        })
    }

    /// Non-simulation commands only produce JSON.
    fn require_json(&self) -> CliResult<()> {
        match self.format {
            Some(Format::Csv) => Err(CliError::Validation(
                "this command only supports --format json".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Context::new(cli.global)?;
    match cli.command {
        Command::Simulate(cmd) => simulate::run(&ctx, cmd),
        Command::Exact(cmd) => {
            ctx.require_json()?;
            exact::run(&ctx, cmd)
        }
        Command::Tables(cmd) => {
            ctx.require_json()?;
            tables::run(&ctx, cmd)
        }
        Command::Dag(cmd) => {
            ctx.require_json()?;
            dag::run(&ctx, cmd)
        }
        Command::Builtin { name } => {
            ctx.require_json()?;
            builtin::run(&ctx, &name)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
