use qsep::Error;
use thiserror::Error;

/// Failures with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant `{check}` violated: {detail}")]
    Invariant { check: String, detail: String },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("dimension rejected: {0}")]
    Dimension(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invariant { .. } => 3,
            CliError::Solver(_) | CliError::Output(_) => 4,
            CliError::Dimension(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidState { check, detail } => {
                if check == qsep::StateCheck::Dims {
                    CliError::Parse(detail)
                } else {
                    CliError::Invariant {
                        check: check.name().to_string(),
                        detail,
                    }
                }
            }
            Error::NotHermitian { .. } => CliError::Invariant {
                check: "hermitian".into(),
                detail: e.to_string(),
            },
            Error::DimensionTooLarge { .. } => CliError::Dimension(e.to_string()),
            Error::Solver(_)
            | Error::Infeasible { .. }
            | Error::Certificate(_)
            | Error::InconsistentBracket { .. }
            | Error::MalformedProgram(_) => CliError::Solver(e.to_string()),
            Error::InvalidProfile(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidSubsystems(_)
            | Error::InvalidArgument(_)
            | Error::KTooSmall { .. } => CliError::Parse(e.to_string()),
        }
    }
}
