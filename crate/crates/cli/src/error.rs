use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{0}")]
    Tolerance(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure, 3 for a reproduction
    /// outside tolerance.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Tolerance(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<glue_polling::Error> for CliError {
    fn from(e: glue_polling::Error) -> Self {
        use glue_polling::Error as E;
        match e {
            E::InvalidDistribution(_)
            | E::InvalidStation { .. }
            | E::InvalidConfig(_)
            | E::Unstable { .. }
            | E::NonExponentialGlue { .. }
            | E::ZeroArrivalRate { .. }
            | E::ZeroUtilization { .. }
            | E::DegenerateGlue { .. }
            | E::BudgetMismatch { .. } => Self::Validation(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
