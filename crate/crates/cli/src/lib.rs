//! Library half of the `qconv` command: configuration, the four
//! subcommands and their CSV/JSON writers.

pub mod commands;
pub mod config;
pub mod output;

use qconv_core::Error;

/// Error categories map onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => CliError::Config(e.to_string()),
            Error::Io { .. } | Error::Parse { .. } | Error::Validation { .. } => {
                CliError::Io(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("io error on {}: {e}", path.display()))
}

/// Sizes the global rayon pool from `QCONV_THREADS` (unset or 0 = automatic).
pub fn init_threads() -> Result<(), CliError> {
    let threads = match std::env::var("QCONV_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Config(format!(
                "config error in `QCONV_THREADS`: expected an integer, got `{v}`"
            ))
        })?,
        Err(_) => 0,
    };
    // A second call (tests) finds the pool already built; that is fine.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}
