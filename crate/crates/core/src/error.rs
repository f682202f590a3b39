use thiserror::Error;

/// Errors raised by the kernels and state constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} size {size} exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("state vanishes identically (norm² = {norm_sq:e})")]
    NullState { norm_sq: f64 },

    #[error("state is not normalized (norm² = {norm_sq})")]
    Normalization { norm_sq: f64 },

    #[error("subsystem basis is incomplete: deficit weight {deficit:e}")]
    IncompleteBasis { deficit: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("detection spec (alpha={alpha}, beta={beta}) out of bounds for n_up={n_up}, N={n_total}")]
    DetectionBounds {
        alpha: usize,
        beta: usize,
        n_up: usize,
        n_total: usize,
    },

    #[error("sector is empty")]
    EmptySector,

    #[error("state cannot be split for this bipartition: {0}")]
    Bipartition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
