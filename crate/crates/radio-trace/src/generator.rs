//! Synthetic mobility trace generation.
//!
//! A UE moves along a waypoint path past a set of base stations. Received
//! power follows a log-distance path-loss model with optional log-normal
//! shadowing; RSRQ is synthesized as a monotone function of the cell's share
//! of total received linear power. Ground-truth handovers are labeled with
//! an A3-style rule: the candidate must exceed the serving cell by a
//! hysteresis margin continuously for a time-to-trigger interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::{
    Handover, RadioSample, Trace, TraceError, RSRP_MAX_DBM, RSRP_MIN_DBM, RSRQ_MAX_DB, RSRQ_MIN_DB,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseStation {
    pub cell_id: u32,
    /// Position in meters.
    pub position: (f64, f64),
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub base_stations: Vec<BaseStation>,
    /// UE path waypoints in meters, traversed at constant speed.
    pub waypoints: Vec<(f64, f64)>,
    pub speed_mps: f64,
    #[serde(default = "default_interval")]
    pub sample_interval_ms: u64,
    /// Path-loss exponent n.
    pub path_loss_exponent: f64,
    /// Reference loss PL0 in dB at `reference_distance_m`.
    pub reference_loss_db: f64,
    #[serde(default = "default_ref_distance")]
    pub reference_distance_m: f64,
    /// Log-normal shadowing standard deviation in dB.
    pub shadowing_sigma_db: f64,
    #[serde(default = "default_hysteresis")]
    pub a3_hysteresis_db: f64,
    #[serde(default = "default_ttt")]
    pub time_to_trigger_ms: u64,
    /// Cells are reported only above this threshold.
    #[serde(default = "default_detection")]
    pub detection_threshold_dbm: f64,
    pub seed: u64,
    /// Trace duration; defaults to the path traversal time.
    #[serde(default)]
    pub duration_ms: Option<u64>,
}

fn default_interval() -> u64 {
    50
}
fn default_ref_distance() -> f64 {
    1.0
}
fn default_hysteresis() -> f64 {
    3.0
}
fn default_ttt() -> u64 {
    160
}
fn default_detection() -> f64 {
    -120.0
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.base_stations.len() < 2 {
            return Err(TraceError::InvalidConfig("need at least 2 base stations".into()));
        }
        if self.speed_mps <= 0.0 {
            return Err(TraceError::InvalidConfig("speed must be positive".into()));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(TraceError::InvalidConfig("shadowing sigma must be >= 0".into()));
        }
        if self.waypoints.is_empty() {
            return Err(TraceError::InvalidConfig("need at least one waypoint".into()));
        }
        if self.waypoints.len() < 2 && self.duration_ms.is_none() {
            return Err(TraceError::InvalidConfig(
                "single-waypoint path requires an explicit duration".into(),
            ));
        }
        if self.sample_interval_ms == 0 {
            return Err(TraceError::InvalidConfig("sample interval must be > 0".into()));
        }
        let mut ids: Vec<u32> = self.base_stations.iter().map(|b| b.cell_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.base_stations.len() {
            return Err(TraceError::InvalidConfig("duplicate cell ids".into()));
        }
        Ok(())
    }
}

/// Log-distance path loss in dB: `PL0 + 10 n log10(d/d0) + shadow_db`.
///
/// Distances inside the reference distance are floored at `d0`.
pub fn path_loss_db(
    config: &GeneratorConfig,
    distance_m: f64,
    shadow_db: f64,
) -> Result<f64, TraceError> {
    if distance_m <= 0.0 {
        return Err(TraceError::NonPositiveDistance);
    }
    let d = distance_m.max(config.reference_distance_m);
    Ok(config.reference_loss_db
        + 10.0 * config.path_loss_exponent * (d / config.reference_distance_m).log10()
        + shadow_db)
}

/// Deterministic shadowing sample for `(seed, cell, sample index)`: the same
/// coordinates always yield the same value, independent of evaluation order.
pub fn shadowing_sample(config: &GeneratorConfig, cell_id: u32, sample_idx: u64) -> f64 {
    if config.shadowing_sigma_db == 0.0 {
        return 0.0;
    }
    let stream = config
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((cell_id as u64) << 32)
        .wrapping_add(sample_idx);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    // Box-Muller transform.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    z * config.shadowing_sigma_db
}

fn path_position(waypoints: &[(f64, f64)], speed_mps: f64, t_ms: u64) -> (f64, f64) {
    let mut remaining = speed_mps * t_ms as f64 / 1000.0;
    for pair in waypoints.windows(2) {
        let (ax, ay) = pair[0];
        let (bx, by) = pair[1];
        let seg = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
        if remaining <= seg {
            if seg == 0.0 {
                return pair[0];
            }
            let f = remaining / seg;
            return (ax + (bx - ax) * f, ay + (by - ay) * f);
        }
        remaining -= seg;
    }
    *waypoints.last().expect("non-empty waypoints")
}

fn path_length(waypoints: &[(f64, f64)]) -> f64 {
    waypoints
        .windows(2)
        .map(|p| ((p[1].0 - p[0].0).powi(2) + (p[1].1 - p[0].1).powi(2)).sqrt())
        .sum()
}

/// Generates a labeled trace from the config. Deterministic per seed.
pub fn generate_trace(config: &GeneratorConfig) -> Result<Trace, TraceError> {
    config.validate()?;
    let duration_ms = config.duration_ms.unwrap_or_else(|| {
        (path_length(&config.waypoints) / config.speed_mps * 1000.0).round() as u64
    });
    let steps = duration_ms / config.sample_interval_ms;

    let mut trace = Trace::default();
    let mut serving: Option<u32> = None;
    // Per-candidate time at which the A3 condition started to hold.
    let mut a3_entered: std::collections::BTreeMap<u32, u64> = Default::default();

    for idx in 0..=steps {
        let t_ms = idx * config.sample_interval_ms;
        let pos = path_position(&config.waypoints, config.speed_mps, t_ms);

        // Received power per cell, before the detection filter.
        let mut rsrp: Vec<(u32, f64)> = Vec::with_capacity(config.base_stations.len());
        for bs in &config.base_stations {
            let d = ((bs.position.0 - pos.0).powi(2) + (bs.position.1 - pos.1).powi(2)).sqrt();
            let shadow = shadowing_sample(config, bs.cell_id, idx);
            let pl = path_loss_db(config, d.max(1e-6), shadow)?;
            let p = (bs.tx_power_dbm - pl).clamp(RSRP_MIN_DBM, RSRP_MAX_DBM);
            rsrp.push((bs.cell_id, p));
        }

        let detected: Vec<(u32, f64)> = rsrp
            .iter()
            .copied()
            .filter(|(_, p)| *p > config.detection_threshold_dbm)
            .collect();
        if detected.is_empty() {
            continue;
        }

        // Initial serving cell: strongest detected cell at first report.
        let serving_id = *serving.get_or_insert_with(|| {
            detected
                .iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite rsrp"))
                .map(|(id, _)| *id)
                .expect("non-empty detected set")
        });
        let serving_rsrp = rsrp
            .iter()
            .find(|(id, _)| *id == serving_id)
            .map(|(_, p)| *p)
            .expect("serving cell is configured");

        // A3 bookkeeping and handover labeling.
        let mut best_trigger: Option<(u32, f64)> = None;
        for &(cell, p) in &detected {
            if cell == serving_id {
                continue;
            }
            if p > serving_rsrp + config.a3_hysteresis_db {
                let entered = *a3_entered.entry(cell).or_insert(t_ms);
                if t_ms - entered >= config.time_to_trigger_ms
                    && best_trigger.is_none_or(|(_, bp)| p > bp)
                {
                    best_trigger = Some((cell, p));
                }
            } else {
                a3_entered.remove(&cell);
            }
        }

        let mut new_serving = serving_id;
        if let Some((target, _)) = best_trigger {
            trace.handovers.push(Handover {
                t_ms,
                source: serving_id,
                target,
            });
            new_serving = target;
            serving = Some(target);
            a3_entered.clear();
        }

        // Emit samples for detected cells; the serving cell is always
        // reported, even if it fell below the detection threshold.
        let total_linear: f64 = detected.iter().map(|(_, p)| 10f64.powf(p / 10.0)).sum();
        for &(cell, p) in &rsrp {
            let is_detected = detected.iter().any(|(id, _)| *id == cell);
            if !is_detected && cell != new_serving {
                continue;
            }
            let share = 10f64.powf(p / 10.0) / total_linear;
            let rsrq = (RSRQ_MIN_DB + 17.0 * share).clamp(RSRQ_MIN_DB, RSRQ_MAX_DB);
            trace.samples.push(RadioSample {
                t_ms,
                cell_id: cell,
                rsrp_dbm: p,
                rsrq_db: rsrq,
                serving: cell == new_serving,
            });
        }
    }
    Ok(trace)
}
