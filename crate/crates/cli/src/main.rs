use std::path::PathBuf;
use std::process::ExitCode;

use blab_core::experiments::RunKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod specs;
mod svg;

use error::CliError;

#[derive(Parser)]
#[command(name = "blab", version, about = "Decision-boundary projection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines, `[section]` headers).
    config: PathBuf,
    /// `--key value` overrides (`--train.learning_rate 1e-3`), plus
    /// `--resume`, `--stop-after N` and, for gen-data, `--out FILE`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterative projection: train, project onto the boundary, repeat.
    Iterproj(RunArgs),
    /// Iterative projection with a held-out test set.
    Gentrack(RunArgs),
    /// Adversarial transfer between two independently trained networks.
    Transfer(RunArgs),
    /// Repeated training on a symmetric layout, clustered by projection.
    Symmetry(RunArgs),
    /// Property suites: oracle, claims or gradients.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra claims instance (JSON) to check.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Write the suite report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Line chart of mean distance per iteration from a records.csv.
    Plot {
        records: PathBuf,
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Write a config's dataset as CSV.
    GenData(RunArgs),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BLAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Iterproj(a) => commands::cmd_run(RunKind::Iterproj, &a.config, &a.rest),
        Command::Gentrack(a) => commands::cmd_run(RunKind::Gentrack, &a.config, &a.rest),
        Command::Transfer(a) => commands::cmd_transfer(&a.config, &a.rest),
        Command::Symmetry(a) => commands::cmd_symmetry(&a.config, &a.rest),
        Command::Verify {
            suite,
            seed,
            instance,
            report,
        } => commands::cmd_verify(&suite, seed, instance.as_deref(), report.as_deref()),
        Command::Plot { records, output, title } => commands::cmd_plot(&records, &output, title.as_deref()),
        Command::GenData(a) => commands::cmd_gen_data(&a.config, &a.rest),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
