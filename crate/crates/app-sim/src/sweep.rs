//! Sensitivity sweeps over scenario parameters.
//!
//! Each sweep value runs both modes with matched seeds so the two-step /
//! baseline comparison is paired per run.

use crate::error::SimError;
use crate::measure::median_of;
use crate::profile::{ObjectGroup, StateProfile};
use crate::runner::run_scenario;
use crate::scenario::{Mode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Mobility-hint lead time in milliseconds.
    Horizon,
    /// Share of bytes that update (percent, 0-100).
    DynamicFraction,
    /// Total state size in bytes at fixed dynamic fraction.
    TotalSize,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Horizon => "horizon_ms",
            SweepAxis::DynamicFraction => "dynamic_pct",
            SweepAxis::TotalSize => "total_bytes",
        }
    }
}

/// Aggregated result for one (axis value, mode) cell.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub mode: Mode,
    pub runs: usize,
    pub median_blocking_ms: f64,
    pub p90_blocking_ms: f64,
    pub median_downtime_ms: f64,
    pub mean_residual_keys: f64,
    pub total_sync_bytes: u64,
}

/// Builds a profile of roughly `total_bytes` with the given dynamic byte
/// share, in 10 KB objects updating at `rate_per_s`.
pub fn profile_with(total_bytes: usize, dynamic_fraction: f64, rate_per_s: f64) -> StateProfile {
    const OBJ: usize = 10_000;
    let total_objects = (total_bytes as f64 / OBJ as f64).round().max(1.0) as usize;
    let dynamic = ((total_objects as f64) * dynamic_fraction).round() as usize;
    let dynamic = dynamic.min(total_objects);
    let mut objects = Vec::new();
    if total_objects - dynamic > 0 {
        objects.push(ObjectGroup {
            count: total_objects - dynamic,
            size_bytes: OBJ,
            update_rate_per_s: 0.0,
        });
    }
    if dynamic > 0 {
        objects.push(ObjectGroup {
            count: dynamic,
            size_bytes: OBJ,
            update_rate_per_s: rate_per_s,
        });
    }
    StateProfile { objects }
}

fn scenario_for(axis: SweepAxis, value: f64, base: &Scenario) -> Scenario {
    let mut scenario = base.clone();
    match axis {
        SweepAxis::Horizon => scenario.hint_horizon_ms = value,
        SweepAxis::DynamicFraction => {
            scenario.profile = profile_with(base.profile.total_bytes(), value / 100.0, 50.0);
        }
        SweepAxis::TotalSize => {
            scenario.profile =
                profile_with(value as usize, base.profile.dynamic_fraction(), 50.0);
        }
    }
    scenario
}

/// Runs `runs` seeded repetitions per (value, mode) and aggregates medians.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &Scenario,
    runs: usize,
) -> Result<Vec<SweepPoint>, SimError> {
    let mut points = Vec::new();
    for &value in values {
        for mode in [Mode::TwoStep, Mode::BaselineReactive] {
            let mut blocking = Vec::new();
            let mut downtime = Vec::new();
            let mut residual = Vec::new();
            let mut bytes = 0u64;
            for run in 0..runs {
                let mut scenario = scenario_for(axis, value, base);
                scenario.mode = mode;
                scenario.seed = base.seed.wrapping_add(run as u64);
                let meas = run_scenario(&scenario)?;
                blocking.extend(meas.handovers.iter().map(|h| h.blocking_ms));
                downtime.extend(meas.handovers.iter().map(|h| h.downtime_ms));
                residual.extend(meas.handovers.iter().map(|h| h.residual_keys as f64));
                bytes += meas.total_sync_bytes();
            }
            let mut sorted = blocking.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let p90 = if sorted.is_empty() {
                f64::NAN
            } else {
                sorted[((sorted.len() - 1) as f64 * 0.9).round() as usize]
            };
            points.push(SweepPoint {
                axis,
                value,
                mode,
                runs,
                median_blocking_ms: median_of(blocking.into_iter()),
                p90_blocking_ms: p90,
                median_downtime_ms: median_of(downtime.into_iter()),
                mean_residual_keys: if residual.is_empty() {
                    f64::NAN
                } else {
                    residual.iter().sum::<f64>() / residual.len() as f64
                },
                total_sync_bytes: bytes,
            });
        }
    }
    Ok(points)
}
