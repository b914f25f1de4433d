//! Harness errors mapped onto process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 2: malformed configuration, files, or arguments.
    #[error("invalid config: {0}")]
    Config(String),

    /// Exit 3: a mathematical precondition of the experiment fails.
    #[error("mathematical precondition failed: {0}")]
    MathPrecondition(String),

    /// Exit 4: numerical failure (degenerate kit, unstable rank, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MathPrecondition(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 2,
        }
    }
}

impl From<latbump_core::Error> for CliError {
    fn from(e: latbump_core::Error) -> Self {
        use latbump_core::Error as E;
        match e {
            E::DegenerateKit(_) | E::RankUnstable { .. } | E::NonFinite(_) => {
                CliError::Numerical(e.to_string())
            }
            E::TolUnreachable { .. } => CliError::Numerical(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::Json(_)
            | E::InvalidParameter { .. }
            | E::BadBox(_)
            | E::BadSampleRate(_)
            | E::DimensionMismatch { .. }
            | E::DuplicateEntry { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
