//! Radio measurement types shared across the prediction pipeline.

use thiserror::Error;

/// Valid RSRP range in dBm.
pub const RSRP_MIN_DBM: f64 = -140.0;
pub const RSRP_MAX_DBM: f64 = -44.0;
/// Valid RSRQ range in dB.
pub const RSRQ_MIN_DB: f64 = -20.0;
pub const RSRQ_MAX_DB: f64 = -3.0;

/// One timestamped RSRP/RSRQ measurement for a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioSample {
    pub t_ms: u64,
    pub cell_id: u32,
    pub rsrp_dbm: f64,
    pub rsrq_db: f64,
    pub serving: bool,
}

/// Ground-truth handover annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handover {
    pub t_ms: u64,
    pub source: u32,
    pub target: u32,
}

/// A radio trace: measurement series plus labeled handovers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub samples: Vec<RadioSample>,
    pub handovers: Vec<Handover>,
}

impl Trace {
    /// Distinct cells appearing in the trace.
    pub fn cells(&self) -> Vec<u32> {
        let mut cells: Vec<u32> = self.samples.iter().map(|s| s.cell_id).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// Serving cell at time `t_ms`, from the most recent serving sample.
    pub fn serving_at(&self, t_ms: u64) -> Option<u32> {
        self.samples
            .iter()
            .rev()
            .find(|s| s.t_ms <= t_ms && s.serving)
            .map(|s| s.cell_id)
    }

    /// Checks structural invariants: strictly increasing handover times,
    /// target != source, per-cell sample times strictly increasing and
    /// measurements within their valid ranges.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut last: std::collections::BTreeMap<u32, u64> = Default::default();
        for s in &self.samples {
            if !(RSRP_MIN_DBM..=RSRP_MAX_DBM).contains(&s.rsrp_dbm) {
                return Err(TraceError::OutOfRange {
                    line: 0,
                    what: "rsrp_dbm",
                });
            }
            if !(RSRQ_MIN_DB..=RSRQ_MAX_DB).contains(&s.rsrq_db) {
                return Err(TraceError::OutOfRange {
                    line: 0,
                    what: "rsrq_db",
                });
            }
            if let Some(prev) = last.insert(s.cell_id, s.t_ms) {
                if s.t_ms <= prev {
                    return Err(TraceError::NonMonotonicSamples { cell: s.cell_id });
                }
            }
        }
        let mut prev_t = None;
        for h in &self.handovers {
            if h.source == h.target {
                return Err(TraceError::SelfHandover { t_ms: h.t_ms });
            }
            if let Some(prev) = prev_t {
                if h.t_ms <= prev {
                    return Err(TraceError::NonMonotonicHandovers { t_ms: h.t_ms });
                }
            }
            prev_t = Some(h.t_ms);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("distance must be positive")]
    NonPositiveDistance,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("value out of range at line {line}: {what}")]
    OutOfRange { line: usize, what: &'static str },
    #[error("samples for cell {cell} are not strictly increasing in time")]
    NonMonotonicSamples { cell: u32 },
    #[error("handover at {t_ms} ms has target == source")]
    SelfHandover { t_ms: u64 },
    #[error("handover times not strictly increasing at {t_ms} ms")]
    NonMonotonicHandovers { t_ms: u64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TraceError {
    fn from(e: std::io::Error) -> Self {
        TraceError::Io(e.to_string())
    }
}
