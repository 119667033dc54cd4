//! Batch front end for the k-symplectic symmetry toolkit: system-file
//! loading, the classify / charge / simulate / verify workflows, and the
//! self-test suite. Every workflow is a composition of `ksym-core`
//! operations; nothing mathematical lives here.

pub mod commands;
pub mod report;
pub mod schema;
pub mod selftest;

use std::fmt;

/// CLI-level error with its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: file, schema, expression, missing names. Exit 1.
    Input(String),
    /// Mathematical failure: non-integrable, inconsistency, failed
    /// verification. Exit 2.
    Math(String),
    /// Charge routes disagree. Exit 3.
    RouteMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Math(_) => 2,
            CliError::RouteMismatch(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Math(m) => write!(f, "mathematical failure: {m}"),
            CliError::RouteMismatch(m) => write!(f, "route mismatch: {m}"),
        }
    }
}

impl From<ksym_core::Error> for CliError {
    fn from(e: ksym_core::Error) -> Self {
        use ksym_core::Error as E;
        match &e {
            E::Syntax { .. }
            | E::UnknownIdentifier { .. }
            | E::NonIntegerExponent { .. }
            | E::ForbiddenSymbol { .. }
            | E::ComponentCount { .. }
            | E::IndexOutOfRange { .. }
            | E::GridImport(_)
            | E::Precondition(_)
            | E::Io(_) => CliError::Input(e.to_string()),
            E::RouteMismatch { .. } => CliError::RouteMismatch(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
