use thiserror::Error;

/// Errors produced by grid construction, group operations and solvers.
///
/// Dimension mismatches between algebra vectors and a `GroupModel` are
/// treated as contract violations and panic instead of returning `Err`.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid group model: {0}")]
    InvalidGroup(String),

    #[error("grid construction failed: {0}")]
    GridConstruction(String),

    #[error("log map outside injectivity radius: {0}")]
    LogDomain(String),

    #[error("reduced section is not flat: max |F| = {max_curvature:.3e} exceeds tolerance {tol:.3e}")]
    NotFlat { max_curvature: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("solver stalled: {0}")]
    Stalled(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 for numeric failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotFlat { .. } | Error::Numeric(_) | Error::Stalled(_) => 1,
            Error::InvalidGroup(_)
            | Error::GridConstruction(_)
            | Error::LogDomain(_)
            | Error::Config(_)
            | Error::Parse(_)
            | Error::Io(_) => 2,
        }
    }
}
