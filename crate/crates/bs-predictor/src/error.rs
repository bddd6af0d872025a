use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PredictorError {
    #[error("no samples to extrapolate")]
    Empty,
    #[error("source cell lacks a full window of samples")]
    NoSourceWindow,
    #[error("candidate cell has no samples")]
    NoCandidate,
    #[error("feature shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dataset must contain both classes")]
    DegenerateDataset,
    #[error("no serving cell known at prediction time")]
    NoServingCell,
    #[error("model file corrupt: {0}")]
    ModelFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PredictorError {
    fn from(e: std::io::Error) -> Self {
        PredictorError::Io(e.to_string())
    }
}
