use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },

    #[error("line {line}: uncertainty {value} is negative")]
    NegativeUncertainty { line: u64, value: f64 },

    #[error(transparent)]
    Data(#[from] ccal_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),

    #[error("thread pool: {0}")]
    Pool(String),
}

/// Outcome classes and the process exit code of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Success = 0,
    InputError = 1,
    NoConvergence = 2,
}

impl ExitClass {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl CliError {
    pub fn exit_class(&self) -> ExitClass {
        use ccal_core::Error as E;
        match self {
            CliError::Data(E::NoConvergence(_) | E::NonPositiveVariance(_) | E::AllReplicatesFailed(_)) => {
                ExitClass::NoConvergence
            }
            _ => ExitClass::InputError,
        }
    }
}
