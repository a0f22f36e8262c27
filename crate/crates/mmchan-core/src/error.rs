//! Crate-wide error type.
//!
//! File-format problems carry enough location detail (path, row, column) to
//! point at the offending cell; domain errors carry the violated rule.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a data file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content. `line` is 1-based and counts the JSON header
    /// line; `column` is the 1-based CSV field index when applicable.
    #[error("parse error in {path} at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        path: String,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    /// Structurally valid input that violates a domain rule
    /// (e.g. a negative bandwidth or a path gain above 0 dB).
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    /// An operation that needs data received none (or too little).
    #[error("{0}")]
    Empty(String),

    /// Two band configurations cannot be compared; lists every failed
    /// criterion by name.
    #[error("bands are not comparable: {}", failures.join("; "))]
    NotComparable { failures: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(
        path: &std::path::Path,
        line: usize,
        column: Option<usize>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn empty(what: &str) -> Self {
        Error::Empty(format!("{what} is empty"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
