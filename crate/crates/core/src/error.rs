use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be a power of two and at least 8, got {0}")]
    GridSize(usize),
    #[error("domain length must be positive and finite, got {0}")]
    GridLength(f64),
    #[error("fields live on incompatible grids ({0} vs {1} samples)")]
    GridMismatch(usize, usize),
    #[error("field contains non-finite samples")]
    NonFiniteField,
    #[error("norm order p must be >= 1, got {0}")]
    NormOrder(f64),
    #[error("zero field where a nonzero field is required")]
    ZeroField,
    #[error("potential: {0}")]
    Potential(String),
    #[error("measure: {0}")]
    Measure(String),
    #[error("problem: {0}")]
    Problem(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("strichartz: {0}")]
    Strichartz(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
