use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("store error: {0}")]
    Store(#[from] edge_store::StoreError),
    #[error("mobility error: {0}")]
    Mobility(#[from] mobility::MobilityError),
}
