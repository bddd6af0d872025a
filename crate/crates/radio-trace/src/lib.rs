//! Radio trace tooling: a log-distance path-loss mobility generator with
//! A3-labeled ground-truth handovers, and CSV ingestion for user-supplied
//! datasets.

pub mod csv;
pub mod family;
pub mod generator;
pub mod types;

pub use csv::{parse_trace_file, parse_trace_str, write_trace_file, write_trace_string};
pub use family::TraceFamily;
pub use generator::{generate_trace, path_loss_db, shadowing_sample, BaseStation, GeneratorConfig};
pub use types::{
    Handover, RadioSample, Trace, TraceError, RSRP_MAX_DBM, RSRP_MIN_DBM, RSRQ_MAX_DB, RSRQ_MIN_DB,
};
