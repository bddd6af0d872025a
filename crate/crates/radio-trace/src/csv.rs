//! Trace CSV format.
//!
//! Schema: `t_ms,cell_id,rsrp_dbm,rsrq_db,serving,event` where `serving` is
//! 0/1 and `event` is empty or `HO:<target_cell>` marking a ground-truth
//! handover at that timestamp. Floats are written with 3 decimals; parsing
//! then re-writing a file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::types::{
    Handover, RadioSample, Trace, TraceError, RSRP_MAX_DBM, RSRP_MIN_DBM, RSRQ_MAX_DB, RSRQ_MIN_DB,
};

pub const TRACE_CSV_HEADER: &str = "t_ms,cell_id,rsrp_dbm,rsrq_db,serving,event";

/// Renders a trace to CSV text (LF line endings).
pub fn write_trace_string(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 40 + 64);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    let mut handovers: std::collections::BTreeMap<(u64, u32), u32> = Default::default();
    for h in &trace.handovers {
        handovers.insert((h.t_ms, h.target), h.target);
    }
    for s in &trace.samples {
        let event = if handovers.contains_key(&(s.t_ms, s.cell_id)) {
            format!("HO:{}", s.cell_id)
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{:.3},{:.3},{},{}",
            s.t_ms,
            s.cell_id,
            s.rsrp_dbm,
            s.rsrq_db,
            if s.serving { 1 } else { 0 },
            event
        )
        .expect("write to string");
    }
    out
}

pub fn write_trace_file<P: AsRef<Path>>(path: P, trace: &Trace) -> Result<(), TraceError> {
    std::fs::write(path, write_trace_string(trace))?;
    Ok(())
}

/// Parses the CSV schema above. Errors carry 1-based line numbers.
pub fn parse_trace_str(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_CSV_HEADER => {}
        Some((_, other)) => {
            return Err(TraceError::Parse {
                line: 1,
                what: format!("unexpected header {other:?}"),
            })
        }
        None => {
            return Err(TraceError::Parse {
                line: 1,
                what: "empty file".into(),
            })
        }
    }

    let mut trace = Trace::default();
    // Serving cell at the latest time strictly before the current row time,
    // used to derive handover sources.
    let mut serving_now: Option<(u64, u32)> = None;
    let mut serving_prev: Option<u32> = None;
    let mut pending_ho: Vec<(u64, u32, usize)> = Vec::new();

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(TraceError::Parse {
                line: line_no,
                what: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let t_ms: u64 = parse_field(fields[0], "t_ms", line_no)?;
        let cell_id: u32 = parse_field(fields[1], "cell_id", line_no)?;
        let rsrp_dbm: f64 = parse_field(fields[2], "rsrp_dbm", line_no)?;
        let rsrq_db: f64 = parse_field(fields[3], "rsrq_db", line_no)?;
        let serving = match fields[4] {
            "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(TraceError::Parse {
                    line: line_no,
                    what: format!("bad serving flag {other:?}"),
                })
            }
        };
        if !(RSRP_MIN_DBM..=RSRP_MAX_DBM).contains(&rsrp_dbm) {
            return Err(TraceError::OutOfRange {
                line: line_no,
                what: "rsrp_dbm",
            });
        }
        if !(RSRQ_MIN_DB..=RSRQ_MAX_DB).contains(&rsrq_db) {
            return Err(TraceError::OutOfRange {
                line: line_no,
                what: "rsrq_db",
            });
        }
        let event = fields[5].trim();
        if !event.is_empty() {
            let target = event
                .strip_prefix("HO:")
                .and_then(|t| t.parse::<u32>().ok())
                .ok_or_else(|| TraceError::Parse {
                    line: line_no,
                    what: format!("malformed event tag {event:?}"),
                })?;
            pending_ho.push((t_ms, target, line_no));
        }
        if serving {
            match serving_now {
                Some((t_prev, cell_prev)) if t_prev < t_ms => {
                    serving_prev = Some(cell_prev);
                    serving_now = Some((t_ms, cell_id));
                }
                None => serving_now = Some((t_ms, cell_id)),
                _ => serving_now = Some((t_ms, cell_id)),
            }
        }
        // Resolve handovers once their source (previous serving) is known.
        while let Some(&(ho_t, target, line_no)) = pending_ho.first() {
            if ho_t > t_ms {
                break;
            }
            let source = serving_prev.ok_or(TraceError::Parse {
                line: line_no,
                what: "handover before any serving cell".into(),
            })?;
            if source == target {
                return Err(TraceError::SelfHandover { t_ms: ho_t });
            }
            trace.handovers.push(Handover {
                t_ms: ho_t,
                source,
                target,
            });
            pending_ho.remove(0);
        }
        trace.samples.push(RadioSample {
            t_ms,
            cell_id,
            rsrp_dbm,
            rsrq_db,
            serving,
        });
    }
    trace.validate()?;
    Ok(trace)
}

pub fn parse_trace_file<P: AsRef<Path>>(path: P) -> Result<Trace, TraceError> {
    parse_trace_str(&std::fs::read_to_string(path)?)
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    what: &str,
    line: usize,
) -> Result<T, TraceError> {
    raw.trim().parse().map_err(|_| TraceError::Parse {
        line,
        what: format!("bad {what}: {raw:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_trace, BaseStation, GeneratorConfig};

    fn config() -> GeneratorConfig {
        GeneratorConfig {
            base_stations: vec![
                BaseStation {
                    cell_id: 1,
                    position: (0.0, 0.0),
                    tx_power_dbm: 30.0,
                },
                BaseStation {
                    cell_id: 2,
                    position: (900.0, 50.0),
                    tx_power_dbm: 30.0,
                },
                BaseStation {
                    cell_id: 3,
                    position: (1800.0, -50.0),
                    tx_power_dbm: 30.0,
                },
            ],
            waypoints: vec![(5.0, 0.0), (1795.0, 0.0)],
            speed_mps: 25.0,
            sample_interval_ms: 50,
            path_loss_exponent: 3.0,
            reference_loss_db: 46.0,
            reference_distance_m: 1.0,
            shadowing_sigma_db: 2.0,
            a3_hysteresis_db: 3.0,
            time_to_trigger_ms: 160,
            detection_threshold_dbm: -120.0,
            seed: 11,
            duration_ms: None,
        }
    }

    #[test]
    fn generated_trace_roundtrips() {
        let trace = generate_trace(&config()).unwrap();
        assert!(!trace.handovers.is_empty());
        let text = write_trace_string(&trace);
        let parsed = parse_trace_str(&text).unwrap();
        assert_eq!(parsed.handovers, trace.handovers);
        assert_eq!(parsed.samples.len(), trace.samples.len());
        // Second write is byte-identical: floats settle at 3 decimals.
        assert_eq!(write_trace_string(&parsed), text);
    }

    #[test]
    fn out_of_range_rsrp_reports_line() {
        let text = format!("{TRACE_CSV_HEADER}\n0,1,-200.000,-10.000,1,\n");
        match parse_trace_str(&text) {
            Err(TraceError::OutOfRange { line, what }) => {
                assert_eq!(line, 2);
                assert_eq!(what, "rsrp_dbm");
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_event_tag_is_parse_error() {
        let text = format!("{TRACE_CSV_HEADER}\n0,1,-90.000,-10.000,1,\n50,2,-88.000,-10.000,1,HO\n");
        match parse_trace_str(&text) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_row_is_parse_error() {
        let text = format!("{TRACE_CSV_HEADER}\n0,1,-90.000\n");
        assert!(matches!(
            parse_trace_str(&text),
            Err(TraceError::Parse { line: 2, .. })
        ));
    }
}
