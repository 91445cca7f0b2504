//! Command-line front end for `replimut-core`: JSON run configurations,
//! CSV/JSON outputs and the `verify` suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod output;
pub mod parallel;
pub mod verify;

use commands::Context;
use config::{Command, RunConfig};
use error::Result;
use output::OutputDir;
use std::path::Path;

/// Resolves `config` for `command`, writes its canonical echo and runs it.
pub fn run(command: Command, config: RunConfig, out: &Path, ctx: &Context) -> Result<serde_json::Value> {
    let config = config.resolve(command)?;
    let dir = OutputDir::create(out)?;
    dir.text("config.json", &config.canonical_json())?;
    match command {
        Command::Eigs => commands::eigs(&config, &dir, ctx),
        Command::Evolve => commands::evolve(&config, &dir, ctx),
        Command::Sweep => commands::sweep(&config, &dir, ctx),
        Command::Verify => verify::verify(&config, &dir, ctx),
    }
}
