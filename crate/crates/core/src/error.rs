use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// A configuration value that violates its declared range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct InvalidParam {
    pub field: &'static str,
    pub reason: String,
}

impl InvalidParam {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Checks `cond`, naming `field` in the error otherwise.
pub(crate) fn ensure(cond: bool, field: &'static str, reason: &str) -> Result<(), InvalidParam> {
    if cond {
        Ok(())
    } else {
        Err(InvalidParam::new(field, reason))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Param(#[from] InvalidParam),

    #[error("placement infeasible: robot {robot} could not be placed after {attempts} attempts")]
    PlacementInfeasible { robot: usize, attempts: u32 },

    #[error("not fully spread: {infected}/{total} robots infected after {elapsed_s:.1} s")]
    NotFullySpread {
        infected: usize,
        total: usize,
        elapsed_s: f64,
    },

    #[error("analytic domain error: {0}")]
    Domain(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Param(_) | Error::Domain(_) => 2,
            Error::PlacementInfeasible { .. } => 3,
            Error::NotFullySpread { .. } => 4,
            Error::Io { .. } => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
