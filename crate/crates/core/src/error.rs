use thiserror::Error;

/// Errors shared by every module. `code()` gives the machine-readable tag used in
/// the CLI error envelope.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point is outside every cylinder enclosure")]
    OutsideAttractor,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconsistent precondition: {0}")]
    Inconsistent(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::OutsideAttractor => "outside_attractor",
            Error::Precondition(_) => "precondition",
            Error::Inconsistent(_) => "inconsistent_precondition",
            Error::NotApplicable(_) => "not_applicable",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Outcome of a budgeted computation that ran out of nodes: either a hard error or a
/// partial result holding everything found before the budget was spent.
#[derive(Debug, Clone)]
pub enum Budgeted<T> {
    Partial { partial: T, explored: u64 },
    Failed(Error),
}

impl<T> From<Error> for Budgeted<T> {
    fn from(e: Error) -> Self {
        Budgeted::Failed(e)
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
