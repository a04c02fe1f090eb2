use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-normalizable kernel shape: {0}")]
    NonNormalizable(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("under-resolved kernel: grid spacing {spacing} exceeds eps/8 = {required}")]
    UnderResolved { spacing: f64, required: f64 },

    #[error("no spontaneous magnetization: beta = {0} <= 1")]
    NoSpontaneousMagnetization(f64),

    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
