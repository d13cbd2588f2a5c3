use thiserror::Error;

/// Errors raised by the trajectory localization library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("snapshot index {index} outside block of length {len}")]
    SnapshotOutOfRange { index: usize, len: usize },

    #[error("block length {0} is too short for a polynomial trajectory of order >= 1")]
    BlockTooShort(usize),

    #[error("angle {0} deg outside the open interval (-90, 90)")]
    AngleOutOfRange(f64),

    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),

    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("invalid trajectory model: {0}")]
    InvalidModel(String),

    #[error("expected {expected} trajectory coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },

    #[error("spatial aliasing at {frequency} Hz: spacing {spacing} m exceeds half wavelength {half_wavelength} m")]
    Aliasing {
        frequency: f64,
        spacing: f64,
        half_wavelength: f64,
    },

    #[error("trajectory leaves (-90, 90) at snapshot {snapshot}: {theta} deg")]
    TrajectoryOutOfBounds { snapshot: usize, theta: f64 },

    #[error("grid axis `{0}` has no points")]
    EmptyAxis(String),

    #[error("grid index {index} out of range for grid of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{truth} true trajectories but only {estimates} estimates; swap the sets")]
    TooFewEstimates { truth: usize, estimates: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
