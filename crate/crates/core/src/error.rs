use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum collision: {lambda} lies in the spectrum of the generator")]
    SpectrumCollision { lambda: String },

    #[error("domain violation at node {node} (path {path:?}): tail ratio {tail_ratio:.3} of the per-mode series")]
    DomainViolation {
        node: usize,
        path: Option<usize>,
        tail_ratio: f64,
    },

    #[error("truncation insufficient: tail ratio {tail_ratio:.3}; suggested K = {suggested:?}")]
    TruncationInsufficient {
        tail_ratio: f64,
        suggested: Option<usize>,
    },

    #[error("operation not supported for {0}")]
    Unsupported(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("state blow-up at node {node} (path {path}): norm {norm:e}")]
    BlowUp { node: usize, path: usize, norm: f64 },

    #[error("singular interior solve for the Dirichlet lift at lambda0 = {lambda0}; shift lambda0 away from the spectrum")]
    SingularLift { lambda0: f64 },

    #[error("Lipschitz validation failed: ratio {ratio:.4} exceeds declared {declared:.4}")]
    LipschitzViolation { ratio: f64, declared: f64 },

    #[error("non-admissible operator: {0}")]
    NotAdmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
