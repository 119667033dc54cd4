//! Error type shared by all toolkit modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent at byte {offset} is not an integer constant")]
    NonIntegerExponent { offset: usize },

    #[error("singular evaluation of `{subexpr}`: {reason}")]
    SingularEvaluation { subexpr: String, reason: String },

    #[error("no singularity-free sample point found in {attempts} attempts")]
    NoSafeSample { attempts: usize },

    #[error("copy index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("operands live on different charts")]
    ChartMismatch,

    #[error("expected {expected} components, got {actual}")]
    ComponentCount { expected: usize, actual: usize },

    #[error("expression references a symbol outside the allowed set: {symbol}")]
    ForbiddenSymbol { symbol: String },

    #[error("interior product requires a form of degree >= 1")]
    DegreeTooLow,

    #[error("1-form is not closed; no primitive exists")]
    NotClosed,

    #[error("singular evaluation on the homotopy segment: {0}")]
    SingularityOnSegment(String),

    #[error("charge routes disagree for component A={component}")]
    RouteMismatch { component: usize },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error(
        "k-vector field is not integrable: path-dependence residual {residual:.3e} exceeds {tol:.3e}"
    )]
    NonIntegrable { residual: f64, tol: f64 },

    #[error("grid needs at least {required} nodes per axis, axis {axis} has {actual}")]
    GridTooSmall {
        axis: usize,
        required: usize,
        actual: usize,
    },

    #[error("grid import: {0}")]
    GridImport(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
