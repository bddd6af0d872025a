//! A migratable per-user key-value store with two-step state
//! synchronization.
//!
//! Every key carries meta-state (creation time, last update, update count,
//! last sync time) from which an update rate is derived. On a mobility hint
//! an application starts a *background* sync that walks dirty keys lowest
//! update rate first; at handover a *blocking* sync freezes the user,
//! transfers the residual dirty set and reports the blocking time — the
//! minimum downtime attributable to state transfer.
//!
//! The store itself is clock-free: callers inject logical timestamps, which
//! makes every test and simulation deterministic. Live deployments pass
//! wall-clock milliseconds and drive sessions over TCP via [`driver`].

pub mod clock;
pub mod driver;
pub mod error;
pub mod meta;
pub mod receiver;
pub mod session;
pub mod store;
pub mod wire;

pub use clock::{Clock, ManualClock, WallClock};
pub use error::{StoreError, SyncError, WireError};
pub use meta::KeyMeta;
pub use receiver::Receiver;
pub use session::{BlockingReport, SessionStep, SourceSession, SyncReport, DEFAULT_WINDOW};
pub use store::{Store, StoredObject};
pub use wire::{AckStatus, Frame, FrameType, SyncPhase};
