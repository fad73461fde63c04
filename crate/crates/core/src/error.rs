//! Error type shared across the crate.

/// Errors surfaced by layout construction, channel assembly, and the
/// numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("subarray spacing {spacing} m below no-overlap minimum {minimum} m")]
    SpacingBelowMinimum { spacing: f64, minimum: f64 },

    #[error("reference-point index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid link geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid path set: {0}")]
    InvalidPathSet(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("water-filling requires at least one positive singular value")]
    AllZeroSingularValues,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("noise covariance after combining is singular")]
    SingularNoiseCovariance,

    #[error("empty feasible spacing interval: min {min} m exceeds max {max} m")]
    EmptySpacingInterval { min: f64, max: f64 },

    #[error("invalid distance distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid architecture parameters: {0}")]
    InvalidArchitecture(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
