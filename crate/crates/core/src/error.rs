use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shift ({dx}, {dy}) is not commensurate with the grid")]
    Incommensurate { dx: String, dy: String },

    #[error("field of {requested} samples exceeds the configured bound of {limit}")]
    Overflow { requested: usize, limit: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("expected a {expected}-flavored element, found {found}")]
    FlavorMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unexpected p-support {found:?} (allowed {allowed:?})")]
    PSupport { found: Vec<i64>, allowed: Vec<i64> },

    #[error("{property} violated: {detail}")]
    Structure { property: &'static str, detail: String },

    #[error("right-hand side has nonzero mean {mean:e}; the operator is not invertible on it")]
    NonzeroMean { mean: f64 },

    #[error("Yang-Mills value has imaginary part {imag:e} (real part {real:e})")]
    NotReal { real: f64, imag: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
