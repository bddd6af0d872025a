//! Labeled window extraction from annotated traces.
//!
//! Positives are (source -> true target) windows taken shortly before each
//! handover. Negatives combine other candidates at the same instants with
//! windows from quiet periods far from any handover; they are subsampled to
//! a configured ratio, deterministically per seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use radio_trace::Trace;

use crate::error::PredictorError;
use crate::features::{build_features, CellHistory, FeatureVector};

#[derive(Debug, Clone)]
pub struct WindowSpec {
    pub n: usize,
    pub interval_ms: u64,
    /// Positives are drawn from this many milliseconds before a handover.
    pub positive_lookback_ms: u64,
    /// Quiet negatives stay at least this far from any handover.
    pub quiet_margin_ms: u64,
    /// Cap on negatives per positive.
    pub negatives_per_positive: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            n: 6,
            interval_ms: 50,
            positive_lookback_ms: 300,
            quiet_margin_ms: 1500,
            negatives_per_positive: 2.0,
        }
    }
}

/// Builds a labeled dataset from annotated traces.
pub fn extract_dataset(
    traces: &[Trace],
    spec: &WindowSpec,
    seed: u64,
) -> Result<Vec<(FeatureVector, bool)>, PredictorError> {
    let mut positives: Vec<FeatureVector> = Vec::new();
    let mut negatives: Vec<FeatureVector> = Vec::new();

    for trace in traces {
        let history = CellHistory::from_samples(&trace.samples);
        let ho_times: Vec<u64> = trace.handovers.iter().map(|h| h.t_ms).collect();
        let mut prev_ho = 0u64;
        for ho in &trace.handovers {
            let src_times: Vec<u64> = history
                .upto(ho.source, ho.t_ms.saturating_sub(1))
                .iter()
                .map(|s| s.t_ms)
                .filter(|t| *t + spec.positive_lookback_ms >= ho.t_ms && *t > prev_ho)
                .collect();
            for &t in &src_times {
                if let Ok(fv) =
                    build_features(&history, ho.source, ho.target, t, spec.n, spec.interval_ms)
                {
                    positives.push(fv);
                }
                // Other candidates at the same instant are hard negatives.
                for cell in history.cells() {
                    if cell == ho.source || cell == ho.target {
                        continue;
                    }
                    if let Ok(fv) =
                        build_features(&history, ho.source, cell, t, spec.n, spec.interval_ms)
                    {
                        negatives.push(fv);
                    }
                }
            }
            prev_ho = ho.t_ms;
        }

        // Quiet periods: serving cell stable, far from every handover.
        for s in trace.samples.iter().filter(|s| s.serving) {
            let t = s.t_ms;
            if ho_times
                .iter()
                .any(|ho_t| t.abs_diff(*ho_t) < spec.quiet_margin_ms)
            {
                continue;
            }
            // Thin the quiet grid to one instant per second.
            if t % 1000 != 0 {
                continue;
            }
            for cell in history.cells() {
                if cell == s.cell_id {
                    continue;
                }
                if let Ok(fv) =
                    build_features(&history, s.cell_id, cell, t, spec.n, spec.interval_ms)
                {
                    negatives.push(fv);
                }
            }
        }
    }

    if positives.is_empty() || negatives.is_empty() {
        return Err(PredictorError::DegenerateDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    negatives.shuffle(&mut rng);
    let cap = ((positives.len() as f64) * spec.negatives_per_positive).ceil() as usize;
    negatives.truncate(cap.max(1));

    let mut dataset: Vec<(FeatureVector, bool)> = positives
        .into_iter()
        .map(|fv| (fv, true))
        .chain(negatives.into_iter().map(|fv| (fv, false)))
        .collect();
    dataset.shuffle(&mut rng);
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use radio_trace::{generate_trace, BaseStation, GeneratorConfig};

    #[test]
    fn extraction_yields_both_classes_and_is_deterministic() {
        let config = GeneratorConfig {
            base_stations: vec![
                BaseStation {
                    cell_id: 1,
                    position: (0.0, 0.0),
                    tx_power_dbm: 30.0,
                },
                BaseStation {
                    cell_id: 2,
                    position: (700.0, 60.0),
                    tx_power_dbm: 30.0,
                },
                BaseStation {
                    cell_id: 3,
                    position: (1400.0, -60.0),
                    tx_power_dbm: 30.0,
                },
            ],
            waypoints: vec![(5.0, 0.0), (1395.0, 0.0)],
            speed_mps: 20.0,
            sample_interval_ms: 50,
            path_loss_exponent: 3.0,
            reference_loss_db: 46.0,
            reference_distance_m: 1.0,
            shadowing_sigma_db: 2.0,
            a3_hysteresis_db: 3.0,
            time_to_trigger_ms: 160,
            detection_threshold_dbm: -120.0,
            seed: 4,
            duration_ms: None,
        };
        let trace = generate_trace(&config).unwrap();
        assert!(!trace.handovers.is_empty());
        let spec = WindowSpec::default();
        let a = extract_dataset(&[trace.clone()], &spec, 9).unwrap();
        let b = extract_dataset(&[trace], &spec, 9).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(a.iter().any(|(_, y)| *y));
        assert!(a.iter().any(|(_, y)| !*y));
    }
}
