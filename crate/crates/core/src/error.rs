use std::fmt;

/// Errors surfaced by context construction, arithmetic and evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid field/extension data (p even, D inconsistent with the kind, ...).
    InvalidContext(String),
    /// An operation needed more p-adic digits than the context provides.
    Precision(String),
    /// Input outside the domain of the operation (zero argument, level too deep, ...).
    Domain(String),
    /// A displayed denominator vanished at the requested parameters.
    Pole(String),
    /// A shell sum did not become geometric / did not converge within the depth budget.
    Divergent(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidContext(m) => write!(f, "invalid context: {m}"),
            Error::Precision(m) => write!(f, "precision shortfall: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Pole(m) => write!(f, "pole: {m}"),
            Error::Divergent(m) => write!(f, "divergent: {m}"),
            Error::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
