use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Y_{order}({argument}) overflows")]
    Overflow { order: i64, argument: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("surface rejected: {0}")]
    Surface(String),

    #[error("invalid beam parameters: {0}")]
    Beam(String),

    #[error("evaluation point {index} lies inside the source region (rho = {rho}, source max = {rho_max})")]
    InteriorPoint { index: usize, rho: f64, rho_max: f64 },

    #[error("observation point {index} is {distance} m from the surface, below the minimum {min_distance} m")]
    TooClose {
        index: usize,
        distance: f64,
        min_distance: f64,
    },

    #[error("direction theta = {0} rad is outside (0, pi)")]
    Direction(f64),

    #[error("spectrum has no nonzero propagating entries")]
    EmptySpectrum,

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("scenario field `{field}`: {message}")]
    Scenario { field: String, message: String },

    #[error("solver warning promoted to error: {0}")]
    Strict(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
