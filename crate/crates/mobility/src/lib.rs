//! Mobility event bus.
//!
//! Receives predictions from the target-BS predictor, resolves target cells
//! to edge hosts through the topology map, and delivers mobility events to
//! registered applications: HINT ahead of a likely handover (debounced,
//! suppressed when the target shares the current edge host), HANDOVER_START
//! with the ground-truth target (flagged when the preceding hint named a
//! different host, so the app falls back to a fully reactive blocking sync)
//! and HANDOVER_COMPLETE.

use std::collections::BTreeMap;
use std::fmt;

use bs_predictor::HandoverPrediction;
use thiserror::Error;

pub const DEFAULT_DEBOUNCE_MS: u64 = 500;

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("cell {0} is not mapped to an edge host")]
    UnknownCell(u32),
    #[error("no serving cell recorded for ue {0}")]
    UnknownServingCell(String),
    #[error("topology parse error at line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MobilityError {
    fn from(e: std::io::Error) -> Self {
        MobilityError::Io(e.to_string())
    }
}

/// An edge host endpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HostPort {
    pub host: String,
    pub port: u16,
}

impl fmt::Display for HostPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.host, self.port)
    }
}

/// Cell to edge-host mapping. Multiple cells may share one host (an edge
/// site aggregates a set of base stations); each cell maps to exactly one.
#[derive(Debug, Clone, Default)]
pub struct EdgeTopology {
    cells: BTreeMap<u32, HostPort>,
}

impl EdgeTopology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cell_id: u32, host: &str, port: u16) {
        self.cells.insert(
            cell_id,
            HostPort {
                host: host.to_string(),
                port,
            },
        );
    }

    pub fn resolve(&self, cell_id: u32) -> Result<&HostPort, MobilityError> {
        self.cells
            .get(&cell_id)
            .ok_or(MobilityError::UnknownCell(cell_id))
    }

    /// Parses the `cell_id,edge_host,port` CSV (header optional).
    pub fn parse_csv(text: &str) -> Result<Self, MobilityError> {
        let mut topo = Self::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed == "cell_id,edge_host,port" {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 3 {
                return Err(MobilityError::Parse {
                    line: line_no,
                    what: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let cell_id = fields[0].trim().parse().map_err(|_| MobilityError::Parse {
                line: line_no,
                what: format!("bad cell_id {:?}", fields[0]),
            })?;
            let port = fields[2].trim().parse().map_err(|_| MobilityError::Parse {
                line: line_no,
                what: format!("bad port {:?}", fields[2]),
            })?;
            topo.insert(cell_id, fields[1].trim(), port);
        }
        Ok(topo)
    }

    pub fn load_csv<P: AsRef<std::path::Path>>(path: P) -> Result<Self, MobilityError> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityEventKind {
    Hint,
    HandoverStart,
    HandoverComplete,
}

/// Event delivered to registered applications.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityEvent {
    pub kind: MobilityEventKind,
    pub ue_id: String,
    pub t_ms: u64,
    pub target_cell: u32,
    pub target_host: HostPort,
    /// For HINT: always true. For HANDOVER_START: whether the last hint
    /// named this host; false means misprediction or no hint, so the app
    /// must run a fully reactive blocking sync to this (correct) host.
    pub predicted: bool,
}

/// Event sink invoked on the handler's thread; it must hand off promptly.
pub type EventSink = Box<dyn Fn(&MobilityEvent) + Send>;

#[derive(Debug, Clone, Default)]
struct UeMobilityState {
    serving_cell: Option<u32>,
    /// Last emitted hint: (host, cell, time).
    last_hint: Option<(HostPort, u32, u64)>,
}

/// The event bus. Per-UE event emission is serialized by construction: the
/// handler is driven by one thread (or one simulator event loop).
pub struct MobilityHandler {
    topology: EdgeTopology,
    apps: BTreeMap<String, EventSink>,
    ues: BTreeMap<String, UeMobilityState>,
    debounce_ms: u64,
}

impl MobilityHandler {
    pub fn new(topology: EdgeTopology) -> Self {
        Self {
            topology,
            apps: BTreeMap::new(),
            ues: BTreeMap::new(),
            debounce_ms: DEFAULT_DEBOUNCE_MS,
        }
    }

    pub fn with_debounce_ms(mut self, debounce_ms: u64) -> Self {
        self.debounce_ms = debounce_ms;
        self
    }

    /// Registers an application to receive all subsequent mobility events.
    /// Re-registering replaces the previous sink.
    pub fn register_app(&mut self, app_id: &str, sink: EventSink) {
        self.apps.insert(app_id.to_string(), sink);
    }

    pub fn set_serving(&mut self, ue_id: &str, cell: u32) {
        self.ues.entry(ue_id.to_string()).or_default().serving_cell = Some(cell);
    }

    pub fn serving_of(&self, ue_id: &str) -> Option<u32> {
        self.ues.get(ue_id).and_then(|u| u.serving_cell)
    }

    fn deliver(&self, event: &MobilityEvent) {
        for sink in self.apps.values() {
            sink(event);
        }
    }

    /// Feeds a predictor output. Emits a HINT when a handover is likely and
    /// the top-1 target resolves to a different edge host than the serving
    /// cell's; identical (ue, host) hints within the debounce window are
    /// suppressed, and a target on the current host needs no app migration.
    pub fn on_prediction(
        &mut self,
        ue_id: &str,
        prediction: &HandoverPrediction,
        now_ms: u64,
    ) -> Result<Vec<MobilityEvent>, MobilityError> {
        if !prediction.handover_likely || prediction.targets.is_empty() {
            return Ok(Vec::new());
        }
        let target_cell = prediction.targets[0];
        let target_host = self.topology.resolve(target_cell)?.clone();
        let serving = self
            .ues
            .get(ue_id)
            .and_then(|u| u.serving_cell)
            .ok_or_else(|| MobilityError::UnknownServingCell(ue_id.to_string()))?;
        let serving_host = self.topology.resolve(serving)?;
        if *serving_host == target_host {
            return Ok(Vec::new());
        }
        let state = self.ues.entry(ue_id.to_string()).or_default();
        if let Some((host, _, t)) = &state.last_hint {
            if *host == target_host && now_ms.saturating_sub(*t) < self.debounce_ms {
                return Ok(Vec::new());
            }
        }
        state.last_hint = Some((target_host.clone(), target_cell, now_ms));
        let event = MobilityEvent {
            kind: MobilityEventKind::Hint,
            ue_id: ue_id.to_string(),
            t_ms: now_ms,
            target_cell,
            target_host,
            predicted: true,
        };
        self.deliver(&event);
        Ok(vec![event])
    }

    /// Signals that the network handover to `actual_cell` has started.
    pub fn on_handover_start(
        &mut self,
        ue_id: &str,
        actual_cell: u32,
        now_ms: u64,
    ) -> Result<MobilityEvent, MobilityError> {
        let target_host = self.topology.resolve(actual_cell)?.clone();
        let state = self.ues.entry(ue_id.to_string()).or_default();
        let predicted = state
            .last_hint
            .as_ref()
            .is_some_and(|(host, _, _)| *host == target_host);
        state.last_hint = None;
        let event = MobilityEvent {
            kind: MobilityEventKind::HandoverStart,
            ue_id: ue_id.to_string(),
            t_ms: now_ms,
            target_cell: actual_cell,
            target_host,
            predicted,
        };
        self.deliver(&event);
        Ok(event)
    }

    /// Marks the handover finished: the UE now serves from `cell`.
    pub fn on_handover_complete(
        &mut self,
        ue_id: &str,
        cell: u32,
        now_ms: u64,
    ) -> Result<MobilityEvent, MobilityError> {
        let target_host = self.topology.resolve(cell)?.clone();
        self.set_serving(ue_id, cell);
        let event = MobilityEvent {
            kind: MobilityEventKind::HandoverComplete,
            ue_id: ue_id.to_string(),
            t_ms: now_ms,
            target_cell: cell,
            target_host,
            predicted: true,
        };
        self.deliver(&event);
        Ok(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    fn topology() -> EdgeTopology {
        let mut topo = EdgeTopology::new();
        topo.insert(1, "edge-a", 7001);
        topo.insert(2, "edge-b", 7002);
        topo.insert(3, "edge-c", 7003);
        topo.insert(4, "edge-a", 7001); // cell 4 aggregates onto edge-a
        topo
    }

    fn prediction(targets: &[u32]) -> HandoverPrediction {
        HandoverPrediction {
            t_ms: 0,
            handover_likely: !targets.is_empty(),
            candidates: targets.iter().map(|c| (*c, 0.9)).collect(),
            targets: targets.to_vec(),
        }
    }

    fn collecting_handler() -> (MobilityHandler, Arc<Mutex<Vec<MobilityEvent>>>) {
        let mut handler = MobilityHandler::new(topology());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let sink_seen = Arc::clone(&seen);
        handler.register_app(
            "app",
            Box::new(move |e| sink_seen.lock().unwrap().push(e.clone())),
        );
        handler.set_serving("u1", 1);
        (handler, seen)
    }

    #[test]
    fn hint_emitted_once_per_debounce_window() {
        let (mut handler, seen) = collecting_handler();
        let p = prediction(&[2]);
        let first = handler.on_prediction("u1", &p, 1000).unwrap();
        assert_eq!(first.len(), 1);
        // Identical hint within the window is suppressed.
        assert!(handler.on_prediction("u1", &p, 1200).unwrap().is_empty());
        // After the window it re-emits.
        assert_eq!(handler.on_prediction("u1", &p, 1600).unwrap().len(), 1);
        assert_eq!(seen.lock().unwrap().len(), 2);
    }

    #[test]
    fn same_host_target_emits_nothing() {
        let (mut handler, seen) = collecting_handler();
        // Cell 4 shares edge-a with serving cell 1: aggregation case.
        let p = prediction(&[4]);
        assert!(handler.on_prediction("u1", &p, 100).unwrap().is_empty());
        assert!(seen.lock().unwrap().is_empty());
    }

    #[test]
    fn not_likely_prediction_is_ignored() {
        let (mut handler, seen) = collecting_handler();
        let p = prediction(&[]);
        assert!(handler.on_prediction("u1", &p, 100).unwrap().is_empty());
        assert!(seen.lock().unwrap().is_empty());
    }

    #[test]
    fn unknown_cell_is_an_error() {
        let (mut handler, _) = collecting_handler();
        let p = prediction(&[99]);
        assert_eq!(
            handler.on_prediction("u1", &p, 100),
            Err(MobilityError::UnknownCell(99))
        );
        assert_eq!(
            handler.on_handover_start("u1", 99, 100),
            Err(MobilityError::UnknownCell(99))
        );
    }

    #[test]
    fn handover_start_flags_hint_accuracy() {
        let (mut handler, _) = collecting_handler();
        // Correct hint.
        handler.on_prediction("u1", &prediction(&[2]), 100).unwrap();
        let ev = handler.on_handover_start("u1", 2, 200).unwrap();
        assert!(ev.predicted);
        // Wrong hint: predicted edge-c, actual edge-b.
        handler.on_prediction("u1", &prediction(&[3]), 900).unwrap();
        let ev = handler.on_handover_start("u1", 2, 1000).unwrap();
        assert!(!ev.predicted, "misprediction must be flagged");
        assert_eq!(ev.target_host.host, "edge-b");
        // No hint at all: reactive.
        let ev = handler.on_handover_start("u1", 2, 2000).unwrap();
        assert!(!ev.predicted);
    }

    #[test]
    fn reregistration_replaces_sink_and_delivery_is_exactly_once() {
        let (mut handler, seen_old) = collecting_handler();
        let seen_new = Arc::new(Mutex::new(Vec::new()));
        let sink_seen = Arc::clone(&seen_new);
        handler.register_app(
            "app",
            Box::new(move |e| sink_seen.lock().unwrap().push(e.clone())),
        );
        handler.on_prediction("u1", &prediction(&[2]), 100).unwrap();
        assert!(seen_old.lock().unwrap().is_empty(), "old sink replaced");
        assert_eq!(seen_new.lock().unwrap().len(), 1);
    }

    #[test]
    fn topology_csv_roundtrip_and_errors() {
        let topo = EdgeTopology::parse_csv("cell_id,edge_host,port\n1,edge-a,7001\n2,edge-b,7002\n").unwrap();
        assert_eq!(topo.resolve(1).unwrap().to_string(), "edge-a:7001");
        assert!(matches!(
            EdgeTopology::parse_csv("1,edge-a\n"),
            Err(MobilityError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            EdgeTopology::parse_csv("x,edge-a,70\n"),
            Err(MobilityError::Parse { line: 1, .. })
        ));
    }
}
