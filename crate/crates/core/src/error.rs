use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An atom denominator `1 + u g + t s` (or one of the transforms'
    /// denominators) vanished.
    #[error("pole encountered: |denominator| = {magnitude:e} ({context})")]
    Pole { magnitude: f64, context: &'static str },

    #[error("fixed-point solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("continuation stalled at v = {v:e} (residual {residual:e})")]
    ContinuationStall { v: f64, residual: f64 },

    #[error("no real branch of the constraint equation at g = {g}")]
    NoRealBranch { g: f64 },

    #[error("gap sweep grid too coarse: {0}; increase n_grid")]
    GridTooCoarse(String),

    #[error("x = {x} is not on a spectral gap (Im s = {im:e})")]
    NotOnGap { x: f64, im: f64 },

    #[error("h_{pair} = u g + t s crosses -1 inside the gap (min {h_min}, max {h_max})")]
    SignConstancy { pair: usize, h_min: f64, h_max: f64 },

    #[error("gap tracking failed at y = {y}: {reason}")]
    GapTracking { y: f64, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NonHermitian(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
