//! Command-line front end: flag and config resolution, the figure-data
//! commands, and output rendering.

pub mod args;
pub mod commands;

use std::io::Write;

use thiserror::Error;

pub use args::{Cli, Command, Format, Params};
use pacs::table::OutputTable;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pacs::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 1 for a computation that could not meet its tolerances.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(pacs::Error::Domain(_)) => 2,
            _ => 1,
        }
    }
}

pub fn render(table: &OutputTable, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

/// Run a parsed command and write its table to `--out` or stdout.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let table = commands::run(&cli.command)?;
    let params = cli.command.params().merged()?;
    let text = render(&table, params.format());
    match &params.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Cap rayon's worker count from `PACS_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PACS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("PACS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}
