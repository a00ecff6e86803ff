use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhoError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix dimension {dim} exceeds the configured limit {limit} (box radius {radius}); raise max_dim to proceed")]
    DimensionLimit { dim: usize, limit: usize, radius: u32 },

    #[error("eigensolver failed on a {dim}x{dim} matrix: {detail}")]
    Eigensolver { dim: usize, detail: String },

    #[error("singular value decomposition failed on a {rows}x{cols} matrix")]
    Svd { rows: usize, cols: usize },

    #[error("spectral parameter too close to the spectrum (distance {distance:e})")]
    NearSpectrum { distance: f64 },

    #[error("kernel is not translation invariant")]
    NotTranslationInvariant,

    #[error("Bloch reduction needs a constant_field phase")]
    UnsupportedPhase,

    #[error("p={p} and q={q} are not coprime")]
    NotCoprime { p: i64, q: u64 },

    #[error("no rational with denominator <= {q_max} within {tol:e} of {target}")]
    NoApproximant { target: f64, tol: f64, q_max: u64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("fit needs at least 2 usable points, got {usable}")]
    TooFewPoints { usable: usize },

    #[error("gap closed at delta = {delta} (width {width} <= {min_width})")]
    GapClosed { delta: f64, width: f64, min_width: f64 },

    #[error("no gap separation >= {required}: {detail}")]
    NoGap { required: f64, detail: String },

    // The cause is part of the message, not a chained source, so that
    // chain-printing reporters show it once.
    #[error("failed at epsilon = {epsilon}: {cause}")]
    AtEpsilon { epsilon: f64, cause: Box<GhoError> },

    #[error("model specification: {0}")]
    ModelSpec(String),

    #[error("input data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, GhoError>;

impl GhoError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GhoError::InvalidParameter(msg.into())
    }
}
