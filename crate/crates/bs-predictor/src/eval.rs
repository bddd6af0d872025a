//! Early-prediction evaluation against ground-truth handovers.
//!
//! For each labeled handover the evaluator finds the earliest time after
//! which the pipeline continuously reports the true target as top-1 until
//! the handover fires. Predictions at least the horizon ahead count as true
//! at horizon; correct but later predictions count as late; everything else
//! is wrong or missed.

use radio_trace::Trace;

use crate::features::CellHistory;
use crate::infer::predict;
use crate::lstm::LstmModel;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionMetrics {
    pub true_at_horizon: f64,
    pub late_true: f64,
    pub wrong_or_missed: f64,
    pub handovers: usize,
}

impl PredictionMetrics {
    fn from_counts(true_h: usize, late: usize, wrong: usize) -> Self {
        let total = true_h + late + wrong;
        if total == 0 {
            return Self::default();
        }
        let n = total as f64;
        Self {
            true_at_horizon: true_h as f64 / n,
            late_true: late as f64 / n,
            wrong_or_missed: wrong as f64 / n,
            handovers: total,
        }
    }
}

/// Evaluates top-1 early prediction on annotated traces.
pub fn evaluate(
    traces: &[Trace],
    model: &LstmModel,
    threshold: f64,
    horizon_ms: u64,
    interval_ms: u64,
) -> PredictionMetrics {
    let mut true_h = 0;
    let mut late = 0;
    let mut wrong = 0;

    for trace in traces {
        let history = CellHistory::from_samples(&trace.samples);
        let mut prev_ho_t = 0u64;
        for ho in &trace.handovers {
            // Prediction instants: the source cell's sample times within
            // this serving period, strictly before the handover.
            let times: Vec<u64> = history
                .upto(ho.source, ho.t_ms.saturating_sub(1))
                .iter()
                .map(|s| s.t_ms)
                .filter(|t| *t > prev_ho_t || prev_ho_t == 0)
                .collect();
            prev_ho_t = ho.t_ms;
            if times.is_empty() {
                wrong += 1;
                continue;
            }
            // Walk backwards while the prediction stays correct; the suffix
            // start is the earliest continuously-correct time.
            let mut earliest_correct: Option<u64> = None;
            for &t in times.iter().rev() {
                let correct = predict(&history, ho.source, t, model, threshold, 1, interval_ms)
                    .map(|p| p.handover_likely && p.targets.first() == Some(&ho.target))
                    .unwrap_or(false);
                if correct {
                    earliest_correct = Some(t);
                } else {
                    break;
                }
            }
            match earliest_correct {
                Some(t) if t + horizon_ms <= ho.t_ms => true_h += 1,
                Some(_) => late += 1,
                None => wrong += 1,
            }
        }
    }
    PredictionMetrics::from_counts(true_h, late, wrong)
}

/// Theoretical upper limit of true predictions at a horizon: the fraction of
/// handovers whose true target produced at least one sample at or before
/// `handover - horizon`.
pub fn availability_upper_bound(traces: &[Trace], horizon_ms: u64) -> f64 {
    let mut total = 0usize;
    let mut available = 0usize;
    for trace in traces {
        let history = CellHistory::from_samples(&trace.samples);
        for ho in &trace.handovers {
            total += 1;
            let Some(deadline) = ho.t_ms.checked_sub(horizon_ms) else {
                continue;
            };
            if !history.upto(ho.target, deadline).is_empty() {
                available += 1;
            }
        }
    }
    if total == 0 {
        return 0.0;
    }
    available as f64 / total as f64
}
