use thiserror::Error;

/// Errors raised by the symbolic-space and operator routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol index {index} out of range for an alphabet of size {size}")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("cannot shift the empty word")]
    EmptyWord,

    #[error("{size}^{depth} cylinders exceed the configured cap of {cap}")]
    CapExceeded {
        size: usize,
        depth: usize,
        cap: usize,
    },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid symbol space: {0}")]
    InvalidSpace(String),

    #[error("word of depth {depth} is shorter than the required depth {required}")]
    WordTooShort { depth: usize, required: usize },

    #[error("depth {depth} is too small, at least {required} is required")]
    DepthTooSmall { depth: usize, required: usize },

    #[error("depth mismatch: {0}")]
    DepthMismatch(String),

    #[error("no variation bound supplied for truncation depth {depth}")]
    MissingVariationBound { depth: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid cylinder measure: {0}")]
    InvalidMeasure(String),

    #[error("extended measure has mass deviation {deviation:e}; input is not an eigenmeasure")]
    NotEigenmeasure { deviation: f64 },

    #[error("non-converged input refused (right residual {residual_right:e}, left residual {residual_left:e})")]
    NotConverged {
        residual_right: f64,
        residual_left: f64,
    },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the resource-exhaustion class of failures.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
