//! Crate-wide error type.

use std::fmt;

/// Errors surfaced by the linear algebra, measurement, solver, and
/// persistence layers.
#[derive(Debug)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Input contains NaN or infinite entries.
    NonFinite { context: &'static str },
    /// An iterative factorization exceeded its sweep budget.
    NoConvergence {
        context: &'static str,
        iterations: usize,
    },
    /// A matrix that must have full column (or row) rank is
    /// rank-deficient at the working tolerance.
    RankDeficient { context: &'static str },
    /// An argument lies outside its documented domain.
    InvalidArgument {
        context: &'static str,
        message: String,
    },
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// A persisted file does not match the expected format.
    Parse { line: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                got,
            } => write!(
                f,
                "{context}: dimension mismatch, expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::NonFinite { context } => {
                write!(f, "{context}: input contains NaN or infinite entries")
            }
            Error::NoConvergence {
                context,
                iterations,
            } => write!(f, "{context}: no convergence after {iterations} sweeps"),
            Error::RankDeficient { context } => {
                write!(f, "{context}: rank-deficient at tolerance")
            }
            Error::InvalidArgument { context, message } => {
                write!(f, "{context}: {message}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Parse { line, message } => {
                write!(f, "parse error at line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
