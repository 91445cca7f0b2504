use clap::{Parser, Subcommand};
use replimut::commands::Context;
use replimut::config::{Command, RunConfig};
use replimut::error::CliError;
use replimut::parallel::default_jobs;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral solver for the replicator-mutator equation
#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps
    #[arg(short, long, env = "REPLIMUT_JOBS")]
    jobs: Option<usize>,
    /// Suppress progress messages
    #[arg(short, long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues, eigenfunctions and norm diagnostics
    Eigs(Common),
    /// Time evolution from initial data
    Evolve(Common),
    /// Mode counts of the ground state over a list of sigmas
    Sweep(Common),
    /// Invariant checks and the reproduction criteria
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Eigs(c) => (Command::Eigs, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let result = (|| {
        let config = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None if command == Command::Verify => RunConfig::default_verify(),
            None => return Err(CliError::config("--config is required")),
        };
        let jobs = common.jobs.unwrap_or_else(default_jobs);
        if jobs == 0 {
            return Err(CliError::config("jobs must be at least 1"));
        }
        let ctx = Context { jobs, quiet: common.quiet };
        replimut::run(command, config, &common.out, &ctx)
    })();
    match result {
        Ok(_) => {
            if !common.quiet {
                eprintln!("wrote {}", common.out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
