//! Per-snapshot handover prediction with top-x conflict resolution.

use crate::error::PredictorError;
use crate::features::{build_features, CellHistory};
use crate::lstm::LstmModel;

/// The mobility hint payload: handover likelihood plus ranked target cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverPrediction {
    pub t_ms: u64,
    /// True when any candidate probability strictly exceeds the threshold.
    pub handover_likely: bool,
    /// All scored candidates, descending probability, ties by cell id.
    pub candidates: Vec<(u32, f64)>,
    /// Top-x cells when a handover is likely, empty otherwise.
    pub targets: Vec<u32>,
}

/// Orders candidates by descending probability, ascending cell id on ties.
pub fn rank_candidates(mut scored: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    scored.sort_by(|(ca, pa), (cb, pb)| {
        pb.partial_cmp(pa)
            .expect("probabilities are finite")
            .then_with(|| ca.cmp(cb))
    });
    scored
}

/// Scores every candidate cell with at least one sample against the serving
/// cell and resolves the top-x targets.
///
/// Candidates with fewer than N samples are zero-order extrapolated. Before
/// the serving cell has accumulated a full window no candidate can be
/// scored, which yields an empty, not-likely prediction.
pub fn predict(
    history: &CellHistory,
    serving: u32,
    t_ms: u64,
    model: &LstmModel,
    threshold: f64,
    top_x: usize,
    interval_ms: u64,
) -> Result<HandoverPrediction, PredictorError> {
    if history.upto(serving, t_ms).is_empty() {
        return Err(PredictorError::NoServingCell);
    }
    let n = model.config.seq_len;
    let mut scored = Vec::new();
    for cell in history.cells() {
        if cell == serving {
            continue;
        }
        match build_features(history, serving, cell, t_ms, n, interval_ms) {
            Ok(fv) => scored.push((cell, model.forward(&fv)?)),
            Err(PredictorError::NoCandidate) | Err(PredictorError::NoSourceWindow) => continue,
            Err(other) => return Err(other),
        }
    }
    let candidates = rank_candidates(scored);
    let handover_likely = candidates.iter().any(|(_, p)| *p > threshold);
    let targets = if handover_likely {
        candidates
            .iter()
            .take(top_x)
            .map(|(cell, _)| *cell)
            .collect()
    } else {
        Vec::new()
    };
    Ok(HandoverPrediction {
        t_ms,
        handover_likely,
        candidates,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_orders_by_probability_then_cell_id() {
        let ranked = rank_candidates(vec![(3, 0.4), (2, 0.6), (9, 0.6)]);
        assert_eq!(ranked, vec![(2, 0.6), (9, 0.6), (3, 0.4)]);
    }

    #[test]
    fn equal_probabilities_pick_min_cell_id() {
        let ranked = rank_candidates(vec![(5, 0.5), (2, 0.5)]);
        assert_eq!(ranked[0].0, 2);
    }

    #[test]
    fn argmax_is_invariant_under_monotone_transform() {
        let base = vec![(1, 0.31), (2, 0.62), (3, 0.45), (4, 0.08)];
        let ranked = rank_candidates(base.clone());
        let transformed: Vec<(u32, f64)> = base
            .iter()
            .map(|(c, p)| (*c, (p * 3.0).tanh()))
            .collect();
        let ranked_t = rank_candidates(transformed);
        let order: Vec<u32> = ranked.iter().map(|(c, _)| *c).collect();
        let order_t: Vec<u32> = ranked_t.iter().map(|(c, _)| *c).collect();
        assert_eq!(order, order_t);
    }
}
