use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An evaluation point fell outside the loss family's domain.
    #[error("domain error: {family} loss is undefined at t = {t}: {reason}")]
    Domain {
        family: &'static str,
        t: f64,
        reason: &'static str,
    },

    /// Array or matrix dimensions do not match.
    #[error("shape error: {0}")]
    Shape(String),

    /// A sample set was passed in the wrong role (numerator vs denominator).
    #[error("role error: expected {expected} samples, got {got}")]
    Role {
        expected: &'static str,
        got: &'static str,
    },

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A parameter or risk value became non-finite during training.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A linear system could not be solved.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// AUROC needs at least one sample of each class.
    #[error("label error: {0}")]
    Label(String),

    /// The requested operation is not defined for this loss family.
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    /// Numerical integration could not be carried out.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// Importance weights violate their invariants (negative, non-finite, all zero).
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
