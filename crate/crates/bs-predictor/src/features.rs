//! Sliding-window feature extraction.
//!
//! A classifier input covers the last N samples of a candidate cell with
//! four features per timestep: absolute RSRP and RSRQ of the candidate plus
//! both values relative to the source cell at the aligned timestamp. All
//! features are affinely normalized to [0,1] from their declared ranges.
//! Candidates observed fewer than N times are completed by zero-order
//! extrapolation: the earliest sample is repeated backwards at the nominal
//! sampling interval.

use std::collections::BTreeMap;

use radio_trace::{RadioSample, RSRP_MAX_DBM, RSRP_MIN_DBM, RSRQ_MAX_DB, RSRQ_MIN_DB};

use crate::error::PredictorError;

/// Relative features are mapped to [0,1] from this symmetric range (dB).
pub const REL_RANGE_DB: f64 = 50.0;
/// Features per timestep: rsrp_abs, rsrq_abs, rsrp_rel, rsrq_rel.
pub const FEATURES_PER_STEP: usize = 4;

/// Normalized classifier input: `window` timesteps x 4 features,
/// time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub window: usize,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * FEATURES_PER_STEP..(t + 1) * FEATURES_PER_STEP]
    }
}

pub fn normalize_rsrp(dbm: f64) -> f64 {
    ((dbm - RSRP_MIN_DBM) / (RSRP_MAX_DBM - RSRP_MIN_DBM)).clamp(0.0, 1.0)
}

pub fn normalize_rsrq(db: f64) -> f64 {
    ((db - RSRQ_MIN_DB) / (RSRQ_MAX_DB - RSRQ_MIN_DB)).clamp(0.0, 1.0)
}

pub fn normalize_rel(db: f64) -> f64 {
    ((db + REL_RANGE_DB) / (2.0 * REL_RANGE_DB)).clamp(0.0, 1.0)
}

/// Zero-order extrapolation to a window of `n` samples.
///
/// Fewer than `n` samples: the earliest entry's measurements are repeated
/// backwards, timestamps back-filled at `interval_ms`. More than `n`: the
/// last `n` are returned. Idempotent once the window is full.
pub fn extrapolate(
    samples: &[RadioSample],
    n: usize,
    interval_ms: u64,
) -> Result<Vec<RadioSample>, PredictorError> {
    if samples.is_empty() {
        return Err(PredictorError::Empty);
    }
    if samples.len() >= n {
        return Ok(samples[samples.len() - n..].to_vec());
    }
    let missing = n - samples.len();
    let earliest = samples[0];
    let mut out = Vec::with_capacity(n);
    for k in (1..=missing).rev() {
        out.push(RadioSample {
            t_ms: earliest.t_ms.saturating_sub(k as u64 * interval_ms),
            ..earliest
        });
    }
    out.extend_from_slice(samples);
    Ok(out)
}

/// Per-cell sample series with time-indexed access.
#[derive(Debug, Clone, Default)]
pub struct CellHistory {
    cells: BTreeMap<u32, Vec<RadioSample>>,
}

impl CellHistory {
    pub fn from_samples(samples: &[RadioSample]) -> Self {
        let mut cells: BTreeMap<u32, Vec<RadioSample>> = BTreeMap::new();
        for s in samples {
            cells.entry(s.cell_id).or_default().push(*s);
        }
        for series in cells.values_mut() {
            series.sort_by_key(|s| s.t_ms);
        }
        Self { cells }
    }

    pub fn push(&mut self, sample: RadioSample) {
        self.cells.entry(sample.cell_id).or_default().push(sample);
    }

    pub fn cells(&self) -> impl Iterator<Item = u32> + '_ {
        self.cells.keys().copied()
    }

    /// Samples of `cell` with `t <= t_ms`.
    pub fn upto(&self, cell: u32, t_ms: u64) -> &[RadioSample] {
        let Some(series) = self.cells.get(&cell) else {
            return &[];
        };
        let end = series.partition_point(|s| s.t_ms <= t_ms);
        &series[..end]
    }

    /// Sample of `cell` nearest in time to `t_ms`, among samples `<= upto`.
    fn nearest(&self, cell: u32, t_ms: u64, upto: u64) -> Option<&RadioSample> {
        let series = self.upto(cell, upto);
        if series.is_empty() {
            return None;
        }
        let idx = series.partition_point(|s| s.t_ms <= t_ms);
        let later = series.get(idx);
        let earlier = idx.checked_sub(1).and_then(|i| series.get(i));
        match (earlier, later) {
            (Some(e), Some(l)) => {
                if t_ms - e.t_ms <= l.t_ms - t_ms {
                    Some(e)
                } else {
                    Some(l)
                }
            }
            (Some(e), None) => Some(e),
            (None, Some(l)) => Some(l),
            (None, None) => None,
        }
    }
}

/// Builds the normalized feature window for a `(source, candidate)` pair as
/// of time `t_ms`.
///
/// The source must have at least `n` samples at or before `t_ms`; the
/// candidate needs at least one and is extrapolated to `n`. Each candidate
/// sample aligns to the nearest source sample (nominally within half the
/// sampling interval).
pub fn build_features(
    history: &CellHistory,
    source: u32,
    candidate: u32,
    t_ms: u64,
    n: usize,
    interval_ms: u64,
) -> Result<FeatureVector, PredictorError> {
    let src = history.upto(source, t_ms);
    if src.len() < n {
        return Err(PredictorError::NoSourceWindow);
    }
    let cand = history.upto(candidate, t_ms);
    if cand.is_empty() {
        return Err(PredictorError::NoCandidate);
    }
    let window = extrapolate(cand, n, interval_ms)?;
    let mut values = Vec::with_capacity(n * FEATURES_PER_STEP);
    for c in &window {
        let s = history
            .nearest(source, c.t_ms, t_ms)
            .expect("source window is non-empty");
        values.push(normalize_rsrp(c.rsrp_dbm));
        values.push(normalize_rsrq(c.rsrq_db));
        values.push(normalize_rel(c.rsrp_dbm - s.rsrp_dbm));
        values.push(normalize_rel(c.rsrq_db - s.rsrq_db));
    }
    Ok(FeatureVector { window: n, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t_ms: u64, cell_id: u32, rsrp: f64, rsrq: f64) -> RadioSample {
        RadioSample {
            t_ms,
            cell_id,
            rsrp_dbm: rsrp,
            rsrq_db: rsrq,
            serving: false,
        }
    }

    #[test]
    fn zero_order_hold_repeats_earliest() {
        let input = vec![sample(1000, 7, -90.0, -10.0)];
        let out = extrapolate(&input, 3, 50).unwrap();
        assert_eq!(out.len(), 3);
        for s in &out {
            assert_eq!(s.rsrp_dbm, -90.0);
            assert_eq!(s.rsrq_db, -10.0);
        }
        assert_eq!(out[0].t_ms, 900);
        assert_eq!(out[1].t_ms, 950);
        assert_eq!(out[2].t_ms, 1000);
    }

    #[test]
    fn full_window_returned_unchanged() {
        let input: Vec<_> = (0..3)
            .map(|i| sample(i * 50, 7, -90.0 - i as f64, -10.0))
            .collect();
        let out = extrapolate(&input, 3, 50).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn empty_input_is_error() {
        assert_eq!(extrapolate(&[], 3, 50), Err(PredictorError::Empty));
    }

    #[test]
    fn extrapolation_is_idempotent() {
        for len in 1..=6usize {
            let input: Vec<_> = (0..len)
                .map(|i| sample(1000 + i as u64 * 50, 3, -80.0 - i as f64, -9.0))
                .collect();
            let once = extrapolate(&input, 6, 50).unwrap();
            let twice = extrapolate(&once, 6, 50).unwrap();
            assert_eq!(once, twice, "idempotence failed for len {len}");
        }
    }

    #[test]
    fn identical_series_give_zero_relative_features() {
        let mut samples = Vec::new();
        for i in 0..6u64 {
            samples.push(sample(i * 50, 1, -85.0 - i as f64, -9.0));
            samples.push(sample(i * 50, 2, -85.0 - i as f64, -9.0));
        }
        let history = CellHistory::from_samples(&samples);
        let fv = build_features(&history, 1, 2, 250, 6, 50).unwrap();
        for t in 0..6 {
            let step = fv.step(t);
            // Relative features are exactly the normalized image of 0 dB.
            assert_eq!(step[2], normalize_rel(0.0));
            assert_eq!(step[3], normalize_rel(0.0));
            assert_eq!(step[2], 0.5);
        }
    }

    #[test]
    fn under_sampled_candidate_extends_to_full_window() {
        let mut samples = Vec::new();
        for i in 0..6u64 {
            samples.push(sample(i * 50, 1, -85.0, -9.0));
        }
        // Candidate appears only at the last two timesteps.
        samples.push(sample(200, 2, -80.0, -8.0));
        samples.push(sample(250, 2, -79.0, -8.0));
        let history = CellHistory::from_samples(&samples);
        let fv = build_features(&history, 1, 2, 250, 6, 50).unwrap();
        assert_eq!(fv.values.len(), 24);
        // Leading 4 steps hold the earliest candidate measurement.
        for t in 0..4 {
            assert_eq!(fv.step(t)[0], normalize_rsrp(-80.0));
        }
        assert_eq!(fv.step(5)[0], normalize_rsrp(-79.0));
    }

    #[test]
    fn missing_candidate_is_error() {
        let samples: Vec<_> = (0..6u64).map(|i| sample(i * 50, 1, -85.0, -9.0)).collect();
        let history = CellHistory::from_samples(&samples);
        assert_eq!(
            build_features(&history, 1, 9, 250, 6, 50),
            Err(PredictorError::NoCandidate)
        );
    }

    #[test]
    fn short_source_window_is_error() {
        let samples = vec![sample(0, 1, -85.0, -9.0), sample(0, 2, -85.0, -9.0)];
        let history = CellHistory::from_samples(&samples);
        assert_eq!(
            build_features(&history, 1, 2, 0, 6, 50),
            Err(PredictorError::NoSourceWindow)
        );
    }
}
