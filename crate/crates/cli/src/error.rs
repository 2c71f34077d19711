use serde::Serialize;

/// Error with a machine-readable code, reported through the JSON envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.to_string(), message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("io", message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    /// Input errors raised while building an IFS become config validation errors.
    pub fn from_validation(e: singlab::Error) -> Self {
        match e {
            singlab::Error::InvalidInput(m) => Self::config(m),
            other => other.into(),
        }
    }
}

impl From<singlab::Error> for CliError {
    fn from(e: singlab::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}
