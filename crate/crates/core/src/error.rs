use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("malformed function spec: {0}")]
    MalformedFunction(String),

    #[error("zero of sigma at {at} is not flagged isolated_monotone; irregular-set membership is undecidable")]
    UnflaggedZero { at: f64 },

    #[error("no isolated_monotone flag at {at}")]
    MissingMonotoneFlag { at: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse split used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Runtime,
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Runtime,
            _ => ErrorClass::Validation,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::MalformedFunction(_) => "malformed_function",
            Error::UnflaggedZero { .. } => "unflagged_zero",
            Error::MissingMonotoneFlag { .. } => "missing_monotone_flag",
            Error::Empty(_) => "empty_input",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn check_subcritical(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("{alpha} is outside (0,1)")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} is not a positive finite number")))
    }
}
