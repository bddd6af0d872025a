//! Application-aware 5G control-plane emulator.
//!
//! Models the control plane as three message-processing stages (RRC at the
//! BS, NG-AP at the AMF, NG-AP at the BS) with three priority queues each.
//! Applications promote a UE to the high-priority class through the AF API
//! for the duration of a latency-sensitive session; the weighted scheduler
//! then serves HP/MP/LP in a configurable 6/3/1 slot cycle with downward
//! fallback. A FIFO discipline provides the application-agnostic baseline
//! for latency comparisons.

pub mod af_socket;
pub mod registry;
pub mod sched;
pub mod sim;
pub mod types;

pub use af_socket::{handle_command, AfServer};
pub use registry::{Registry, UeRecord};
pub use sched::{Discipline, FifoScheduler, WeightedScheduler};
pub use sim::{
    median, percentile, procedure_capacity_per_s, simulate, DisciplineKind, LoadConfig, Pattern,
    Sim, SimConfig, SimResult, HANDOVER_PIPELINE,
};
pub use types::{ControlMessage, CpError, Procedure, SchedulerConfig, Stage, UeClass};
