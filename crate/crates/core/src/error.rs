use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution {resolution} below the sampling floor {floor} (16 samples per wavelength)")]
    BelowSamplingFloor { resolution: usize, floor: usize },

    #[error("degenerate field: every sample is zero")]
    DegenerateField,

    #[error("vanishing on inner region")]
    VanishingInnerRegion,

    #[error("region does not fit in the geometry: {0}")]
    OutsideGeometry(String),

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("discretization artifact: {0}")]
    Discretization(String),

    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidArgument(msg.into()))
}
