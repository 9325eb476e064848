use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },

    #[error("malformed document {path}: {source}")]
    Json { path: String, source: serde_json::Error },

    #[error("malformed table {path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("{0}")]
    Invalid(String),

    #[error("segment table {0} has no rows")]
    EmptyTable(String),

    #[error("segment weights in {0} sum to zero")]
    WeightSumZero(String),

    #[error(transparent)]
    Solver(#[from] ocot::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit status families: 2 parse/validation, 3 solver configuration,
/// 4 infeasible constraint construction, 1 for output failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Output,
    Parse,
    Config,
    Infeasible,
}

impl ErrorKind {
    pub fn code(self) -> u8 {
        match self {
            ErrorKind::Output => 1,
            ErrorKind::Parse => 2,
            ErrorKind::Config => 3,
            ErrorKind::Infeasible => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Output => "output",
            ErrorKind::Parse => "parse",
            ErrorKind::Config => "solver-config",
            ErrorKind::Infeasible => "infeasible",
        }
    }
}

impl CliError {
    pub fn kind(&self) -> ErrorKind {
        use ocot::Error as E;
        match self {
            CliError::Write { .. } => ErrorKind::Output,
            CliError::Read { .. }
            | CliError::Json { .. }
            | CliError::Csv { .. }
            | CliError::Invalid(_)
            | CliError::EmptyTable(_)
            | CliError::WeightSumZero(_) => ErrorKind::Parse,
            CliError::Solver(e) => match e {
                E::InvalidConfig(_)
                | E::NumericalUnderflow { .. }
                | E::MaxIterations(_)
                | E::NoZero(_)
                | E::EmptyConstraints => ErrorKind::Config,
                E::OrderCheckFailed(_)
                | E::MarginalsViolated { .. }
                | E::CapacityViolated { .. }
                | E::Infeasible { .. }
                | E::LpInfeasible
                | E::LpUnbounded => ErrorKind::Infeasible,
                _ => ErrorKind::Parse,
            },
        }
    }

    /// One-line JSON record for stderr.
    pub fn report(&self) -> String {
        let kind = self.kind();
        serde_json::json!({ "error": kind.as_str(), "code": kind.code(), "message": self.to_string() }).to_string()
    }
}
