use thiserror::Error;

/// Which [`crate::MultiState`] invariant a candidate operator failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateCheck {
    Hermitian,
    Psd,
    Trace,
    Dims,
}

impl StateCheck {
    pub fn name(self) -> &'static str {
        match self {
            StateCheck::Hermitian => "hermitian",
            StateCheck::Psd => "psd",
            StateCheck::Trace => "trace",
            StateCheck::Dims => "dims",
        }
    }
}

impl std::fmt::Display for StateCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension profile: {0}")]
    InvalidProfile(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state check `{check}` failed: {detail}")]
    InvalidState { check: StateCheck, detail: String },

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large: {what} = {size} exceeds limit {limit}")]
    DimensionTooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("malformed cone program: {0}")]
    MalformedProgram(String),

    #[error("cone program solver did not reach optimality: {0}")]
    Solver(String),

    #[error("cone program is infeasible (phase-I value {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("K = {k} is too small: needs K >= 1 + R_G, bracket [{lower:.6}, {upper:.6}]")]
    KTooSmall { k: usize, lower: f64, upper: f64 },

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("inconsistent bracket: lower {lower} exceeds upper {upper}")]
    InconsistentBracket { lower: f64, upper: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
