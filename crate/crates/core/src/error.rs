use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Operands or arguments that do not fit together (mixed groups, bad grids, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// A window, ball, or region would exceed the configured element budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// A phase point lies outside the fiber it was evaluated on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Checked integer arithmetic overflowed.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    /// A system failed validation and cannot be used downstream.
    #[error("system failed validation: {0}")]
    Invalid(String),
    /// Malformed textual input (group strings, synthetic oracle specs).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
