//! Stateful edge-application simulation.
//!
//! Runs a configurable app (state size, dynamic share, update rate) against
//! the migratable store on a deterministic event clock: client traffic
//! measures RTT and downtime while scheduled handovers trigger hints,
//! background syncs, control-plane gaps and blocking syncs, including
//! misprediction fallback to the correct host.

pub mod error;
pub mod link;
pub mod measure;
pub mod profile;
pub mod runner;
pub mod scenario;
pub mod sweep;

pub use error::SimError;
pub use link::Link;
pub use measure::{median_of, state_digest, HandoverMeasurement, Measurements};
pub use profile::{ObjectGroup, ObjectSpec, StateProfile};
pub use runner::run_scenario;
pub use scenario::{GapModel, Mode, Scenario};
pub use sweep::{profile_with, sweep, SweepAxis, SweepPoint};
