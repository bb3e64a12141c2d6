use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimensions must be at least 1x1, got {rows}x{cols}")]
    EmptyDimension { rows: usize, cols: usize },

    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{op}: dimension overflow")]
    SizeOverflow { op: &'static str },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^H U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("eigensolver failed for dim {dim} (residual {residual:e})")]
    EigenNonConvergence { dim: usize, residual: f64 },

    #[error("index ({index}) out of range for size {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("empty energy window [E={center}, dE={width}]; nearest level at {nearest}")]
    EmptyWindow {
        center: f64,
        width: f64,
        nearest: f64,
    },

    #[error(
        "target energy {target} outside achievable range ({energy_at_hi}, {energy_at_lo}) \
         for beta bracket [{lo}, {hi}]"
    )]
    BetaOutOfRange {
        target: f64,
        lo: f64,
        hi: f64,
        energy_at_lo: f64,
        energy_at_hi: f64,
    },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
