use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert configuration: {0}")]
    InvalidConfig(String),

    #[error("mode index {index} out of range (model has {count} modes)")]
    ModeOutOfRange { index: usize, count: usize },

    #[error("spin index {index} out of range (model has {count} spin factors)")]
    SpinOutOfRange { index: usize, count: usize },

    #[error("drive index {index} out of range (model has {count} drives)")]
    DriveOutOfRange { index: usize, count: usize },

    #[error("operator is not Hermitian (max |H - H^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("drive {drive} has zero Rabi frequency; the balanced transformation is undefined, use the free Hamiltonian")]
    NoDrive { drive: usize },

    #[error("invalid drive parameter: {0}")]
    InvalidDrive(String),

    #[error("equilibrium positions did not converge after {iterations} Newton steps (residual {residual:e})")]
    EquilibriumNotConverged { iterations: usize, residual: f64 },

    #[error("{0} requires a single-drive model")]
    SingleDriveRequired(&'static str),

    #[error("RWA propagation needs at least one resonant (drive, mode) pair")]
    MissingResonance,

    #[error("resonances {first:?} and {second:?} share a drive or a mode; the RWA propagator is not a product of commuting factors")]
    OverlappingResonances {
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("invalid time interval: {0}")]
    InvalidTime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
