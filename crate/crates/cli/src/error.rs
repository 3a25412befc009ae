// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const IO: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const VIOLATION: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path:?}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Engine(#[from] blockseg::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use blockseg::Error as E;
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Io { .. } | Self::Parse { .. } => exit::IO,
            Self::Engine(E::Io { .. } | E::NotSquare { .. } | E::BadCell { .. }) => exit::IO,
            Self::Engine(_) => exit::INFEASIBLE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
