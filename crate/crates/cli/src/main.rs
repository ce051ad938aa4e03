//! `pae-kit`: command-line front end for `pae-core`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numeric or degenerate error.

mod args;
mod commands;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use pae_core::ErrorClass;

use crate::args::Cli;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// A flag combination clap cannot check on its own.
    Usage(String),
    Core {
        error: pae_core::Error,
        source: Option<PathBuf>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core { error, .. } => match error.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numeric => EXIT_NUMERIC,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core { error, source } => {
                write!(f, "{}: {error}", error.name())?;
                let names_path = matches!(
                    error,
                    pae_core::Error::Io { .. }
                        | pae_core::Error::Parse { .. }
                        | pae_core::Error::Schema { .. }
                        | pae_core::Error::Version { .. }
                );
                if let Some(path) = source.as_ref().filter(|_| !names_path) {
                    write!(f, " (source: {})", path.display())?;
                }
                Ok(())
            }
        }
    }
}

impl From<pae_core::Error> for CliError {
    fn from(error: pae_core::Error) -> Self {
        CliError::Core {
            error,
            source: None,
        }
    }
}

/// Attach the input file a core error came from.
pub trait WithSource<T> {
    fn source(self, path: &Path) -> Result<T, CliError>;
}

impl<T> WithSource<T> for pae_core::Result<T> {
    fn source(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|error| CliError::Core {
            error,
            source: Some(path.to_path_buf()),
        })
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("PAE_KIT_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
