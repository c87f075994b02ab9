//! `coalweb`: sample coalescing path systems, count path classes, run
//! verification suites, and render the results as SVG.
//!
//! Exit codes: 0 success, 1 verification suite had failing checks,
//! 2 usage or configuration error, 3 the simulation window could not hold
//! the requested run.

mod artifacts;
mod countcmd;
mod plotcmd;
mod sim;
mod svg;
mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Errors that reach the user; each variant maps to a documented exit code.
#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problem (exit 2).
    Config(String),
    /// The configured window cannot hold the requested run (exit 3).
    Window(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Window(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Window(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "coalweb",
    version,
    about = "Coalescing path systems: simulate, count, verify, plot"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one path family and store it as JSON + CSV (optionally SVG)
    Simulate {
        /// JSON run configuration
        #[arg(long)]
        config: PathBuf,
        /// Override the seed in the configuration
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (created if missing)
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also render the family as a space-time SVG picture
        #[arg(long)]
        svg: bool,
    },
    /// Evaluate counting queries against a stored path family
    Count {
        /// Family JSON file (as written by simulate)
        #[arg(long)]
        family: PathBuf,
        /// JSON file with the query list
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a verification suite and write one CSV row per estimate
    Verify {
        /// JSON suite configuration
        #[arg(long)]
        config: PathBuf,
        /// Override every system seed in the suite
        #[arg(long)]
        seed: Option<u64>,
        /// Default replica count for checks that do not set their own
        #[arg(long)]
        replicas: Option<u32>,
        /// Worker threads; results never depend on this
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render a CSV produced by count or verify as SVG charts
    Plot {
        /// Input CSV file
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Simulate { config, seed, out, svg } => sim::run(&config, seed, &out, svg),
        Cmd::Count { family, queries, out } => countcmd::run(&family, &queries, &out),
        Cmd::Verify { config, seed, replicas, workers, out } => {
            verify::run(&config, seed, replicas, workers, &out)
        }
        Cmd::Plot { input, out } => plotcmd::run(&input, &out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
