//! `ppcl`: generate datasets, run experiments and sweeps, check the analytic
//! properties.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure,
//! 3 verification failure.

mod config;
mod gen_data;
mod run;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ppcl", version, about = "Collaborative learning on randomly projected data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, or the sweep described by a `[sweep]` table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for results.csv and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Check an analytic property by simulation.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// Write a dataset cache file.
    GenData {
        #[arg(long, value_enum)]
        kind: DataKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory of IDX files (mnist).
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Input file (csv).
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        label_column: Option<usize>,
        #[arg(long)]
        n_classes: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Gaussian2d,
    Gaussian10d,
    Mnist,
    Csv,
}

/// A message and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ppcl::Error> for Failure {
    fn from(e: ppcl::Error) -> Self {
        use ppcl::Error as E;
        match e {
            E::Config { .. } | E::Label { .. } | E::Parse { .. } => Failure::config(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run { config, out, threads } => run::run(&config, &out, threads),
        Command::Verify { suite, seed } => verify::verify(suite, seed),
        Command::GenData { kind, out, n_per_class, seed, dir, path, label_column, n_classes } => {
            let request = match kind {
                DataKind::Gaussian2d => gen_data::Request::Gaussian2d { n_per_class, seed },
                DataKind::Gaussian10d => gen_data::Request::Gaussian10d { n_per_class, seed },
                DataKind::Mnist => gen_data::Request::Mnist { dir },
                DataKind::Csv => gen_data::Request::Csv { path, label_column, n_classes },
            };
            gen_data::generate(request, &out)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
