use std::fmt;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("degenerate box (w={w}, h={h})")]
    DegenerateBox { w: f64, h: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A required input was empty so the requested quantity is undefined.
    #[error("{0}")]
    Undefined(&'static str),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Distinguishes the three ways an input file can be rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatErrorKind {
    /// Not parseable as the container format (bad JSON, bad binary header).
    Malformed,
    /// Parseable, but a field is missing, unknown or of the wrong type.
    Schema,
    /// Structurally fine, but a value violates a domain invariant.
    Invariant,
}

impl FormatErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            FormatErrorKind::Malformed => "E100",
            FormatErrorKind::Schema => "E200",
            FormatErrorKind::Invariant => "E300",
        }
    }
}

/// Rejection of an input file, qualified by the JSON path of the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct FormatError {
    pub kind: FormatErrorKind,
    pub path: String,
    pub message: String,
}

impl FormatError {
    pub fn new(kind: FormatErrorKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError {
            kind,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn malformed(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(FormatErrorKind::Malformed, path, message)
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(FormatErrorKind::Schema, path, message)
    }

    pub fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(FormatErrorKind::Invariant, path, message)
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            FormatErrorKind::Malformed => "malformed input",
            FormatErrorKind::Schema => "schema error",
            FormatErrorKind::Invariant => "invalid value",
        };
        if self.path.is_empty() {
            write!(f, "error[{}] {}: {}", self.kind.code(), kind, self.message)
        } else {
            write!(
                f,
                "error[{}] {} at {}: {}",
                self.kind.code(),
                kind,
                self.path,
                self.message
            )
        }
    }
}
