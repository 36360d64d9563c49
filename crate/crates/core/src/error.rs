use thiserror::Error;

/// Errors raised by mesh construction, discretization and the linear solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported quadrature degree {0} (supported: 1..=8)")]
    UnsupportedQuadrature(usize),

    #[error("field does not belong to the space it is used with")]
    SpaceMismatch,

    #[error("expected a {expected} field, got {got}")]
    FieldKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("degenerate Anderson history: difference norm {norm:e} below threshold")]
    DegenerateHistory { norm: f64 },

    #[error("insufficient data for order estimate: {usable} usable residual pairs, need 3")]
    InsufficientData { usable: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl From<std::io::Error> for NseError {
    fn from(e: std::io::Error) -> Self {
        NseError::Io(e.to_string())
    }
}

pub type Result<T, E = NseError> = std::result::Result<T, E>;
