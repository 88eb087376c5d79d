//! Crate-wide error type.

use std::fmt;

/// Everything fallible in this crate returns one of these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Tensor or matrix dimensions do not line up.
    Shape(String),
    /// An operation needs state that is not present (e.g. backward before forward).
    State(String),
    /// A class label outside the five known classes.
    Label(String),
    /// Dataset-level problem: empty set, mismatched lengths, bad counts.
    Data(String),
    /// Input value outside the mathematical domain of a transform.
    Domain(String),
    /// Invalid configuration value.
    Config(String),
    /// Model kind does not support the requested operation.
    Kind(String),
    /// Internal architecture wiring failure; reaching this is a bug.
    Build(String),
    /// Filesystem failure.
    Io(String),
    /// Malformed file contents.
    Format(String),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::Shape(_) => "Shape",
            Error::State(_) => "State",
            Error::Label(_) => "Label",
            Error::Data(_) => "Data",
            Error::Domain(_) => "Domain",
            Error::Config(_) => "Config",
            Error::Kind(_) => "Kind",
            Error::Build(_) => "Build",
            Error::Io(_) => "Io",
            Error::Format(_) => "Format",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Shape(m)
            | Error::State(m)
            | Error::Label(m)
            | Error::Data(m)
            | Error::Domain(m)
            | Error::Config(m)
            | Error::Kind(m)
            | Error::Build(m)
            | Error::Io(m)
            | Error::Format(m) => m,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} error: {}",
            self.kind_name().to_lowercase(),
            self.message()
        )
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
