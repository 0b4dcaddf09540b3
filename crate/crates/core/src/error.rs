use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum AntacError {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver did not converge after {iterations} outer iterations")]
    NoConvergence { iterations: usize },

    #[error("residual cross-product for pair ({i}, {j}) is singular (det = {det:e})")]
    SingularPsi { i: usize, j: usize, det: f64 },

    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<AntacError>,
    },

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<AntacError>,
    },
}

impl AntacError {
    /// True for failures caused by the numbers rather than the shape of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            AntacError::NotPositiveDefinite { .. }
            | AntacError::NoConvergence { .. }
            | AntacError::SingularPsi { .. }
            | AntacError::GenerationFailed { .. } => true,
            AntacError::Column { source, .. } | AntacError::Pair { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, AntacError>;
