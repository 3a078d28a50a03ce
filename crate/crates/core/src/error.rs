use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spectral parameter must have eta > 0 (got eta = {eta})")]
    NonPositiveEta { eta: f64 },

    #[error("spectral parameter must be finite (got E = {energy}, eta = {eta})")]
    NonFiniteSpectralPoint { energy: f64, eta: f64 },

    #[error("eigenvalue index {alpha} outside 1..={n}")]
    AlphaOutOfRange { alpha: usize, n: usize },

    #[error("matrix dimension must be at least {min} (got {n})")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("index {index} is not a row label of the matrix")]
    UnknownIndex { index: usize },

    #[error("cannot delete every row and column of a {n}x{n} matrix")]
    FullDeletion { n: usize },

    #[error("matrix is not Hermitian: |h[{row}][{col}] - conj(h[{col}][{row}])| = {violation:e}")]
    NotHermitian { row: usize, col: usize, violation: f64 },

    #[error("resolvent inverse residual {residual:e} exceeds 1e-8")]
    Singular { residual: f64 },

    #[error("near-singular denominator |G^({upper:?})_{{{index},{index}}}| = {magnitude:e}")]
    NearSingular { index: usize, upper: Vec<usize>, magnitude: f64 },

    #[error("expansion string reached length {length}, above the cap {cap}")]
    DepthCap { length: usize, cap: usize },

    #[error("invalid resolvent factor: {0}")]
    InvalidFactor(String),

    #[error("invalid expansion configuration: {0}")]
    InvalidExpansion(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
