use thiserror::Error;

/// Errors produced by the model, propagator and spectrum layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("phonon index {m} out of range (m_max = {m_max})")]
    PhononOutOfRange { m: usize, m_max: usize },

    #[error("flat index {index} out of range for dimension {dim}")]
    FlatIndexOutOfRange { index: usize, dim: usize },

    #[error("state dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state squared norm {norm2} exceeds 1 (no-jump norms only decay)")]
    NormExceedsUnity { norm2: f64 },

    #[error(
        "generator is numerically non-diagonalizable (reconstruction residual {residual:.3e}); \
         use the quadrature backend"
    )]
    NonDiagonalizable { residual: f64 },

    #[error("linear algebra backend failure: {0}")]
    LinAlg(String),

    #[error("operator of kind {0} cannot be decomposed; expected Hermitian or NonHermitian")]
    UnsupportedOperator(&'static str),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time grid must be non-empty, non-negative and strictly increasing")]
    BadTimeGrid,

    #[error("invalid step configuration: {0}")]
    InvalidSteps(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("grid too short: need at least {needed} points, got {got}")]
    GridTooShort { needed: usize, got: usize },
}
