use thiserror::Error;

/// Failure modes shared across the crate's numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the map's domain ball (distance to center {distance:.6e}, radius {radius:.6e})")]
    OutsideDomain { distance: f64, radius: f64 },

    #[error("segment exits the map's domain ball")]
    SegmentExitsDomain,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no admissible sample at grid point t = {t:.6e}")]
    EmptyAdmissibleSet { t: f64 },

    #[error("map has no analytic inverse")]
    MissingAnalyticInverse,

    #[error("ball of radius {radius:.6e} at the requested center does not fit inside the domain")]
    BallOutsideDomain { radius: f64 },

    #[error("estimates were produced over inconsistent spaces or maps: {0}")]
    MixedInputs(String),
}

pub type Result<T> = std::result::Result<T, Error>;
