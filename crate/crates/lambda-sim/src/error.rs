//! Crate-wide error types and the process exit-code convention.

use thiserror::Error;

/// A named, machine-readable validation diagnostic.
///
/// `code` is a stable snake_case identifier suitable for scripting;
/// `message` is the human-readable explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// One or more invariants of the physical configuration are violated.
    #[error("validation failed:\n{}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),

    /// A numerical routine failed (integration, linear solve, quadrature).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed configuration or data file.
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(code: &'static str, message: impl Into<String>) -> Self {
        Error::Validation(vec![Diagnostic::new(code, message)])
    }

    /// Exit code for the CLI: 0 success, 2 validation, 3 numeric, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } => 2,
            Error::Numeric(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
