use thiserror::Error;

/// Errors returned by client-facing store operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("key not found")]
    NotFound,
    /// Writes are rejected while a blocking sync holds the user frozen.
    #[error("user is frozen by an in-progress blocking sync")]
    Frozen,
    #[error("a blocking sync is already in progress for this user")]
    SyncInProgress,
}

/// Errors from encoding or decoding wire frames.
#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad frame magic: expected 0xED6E, got {0:#06x}")]
    BadMagic(u16),
    #[error("unknown frame type {0}")]
    BadFrameType(u8),
    #[error("payload checksum mismatch: expected {expected:#010x}, got {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },
    #[error("frame truncated while reading {0}")]
    Truncated(&'static str),
    #[error("payload length {0} exceeds limit")]
    PayloadTooLarge(u32),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors surfaced by sync drivers.
#[derive(Debug, Error)]
pub enum SyncError {
    #[error("peer unreachable: {0}")]
    PeerUnreachable(String),
    #[error("sync session aborted by peer")]
    Aborted,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Wire(#[from] WireError),
}
