//! Handover-likelihood threshold learned by F1 maximization.
//!
//! Sweeps a 0.01 grid over (0,1); a validation example counts as predicted
//! positive when its probability is at or above the grid point. Ties resolve
//! to the smallest threshold.

use crate::error::PredictorError;
use crate::features::FeatureVector;
use crate::lstm::LstmModel;

/// F1 score of "predict positive iff prob >= threshold".
pub fn f1_at_threshold(scored: &[(f64, bool)], threshold: f64) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for &(prob, label) in scored {
        let predicted = prob >= threshold;
        match (predicted, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Grid search over scored examples.
pub fn learn_threshold_from_scores(scored: &[(f64, bool)]) -> Result<f64, PredictorError> {
    let positives = scored.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == scored.len() {
        return Err(PredictorError::DegenerateDataset);
    }
    let mut best = (0.0f64, 0.01f64);
    for k in 1..100u32 {
        let threshold = k as f64 / 100.0;
        let f1 = f1_at_threshold(scored, threshold);
        if f1 > best.0 {
            best = (f1, threshold);
        }
    }
    Ok(best.1)
}

/// Scores the validation set with the model, then grid-searches the F1
/// maximizing threshold P.
pub fn learn_threshold(
    model: &LstmModel,
    validation: &[(FeatureVector, bool)],
) -> Result<f64, PredictorError> {
    let mut scored = Vec::with_capacity(validation.len());
    for (fv, label) in validation {
        scored.push((model.forward(fv)?, *label));
    }
    learn_threshold_from_scores(&scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier_returns_first_separating_grid_point() {
        let scored = vec![(0.9, true), (0.9, true), (0.1, false), (0.1, false)];
        assert_eq!(learn_threshold_from_scores(&scored).unwrap(), 0.11);
    }

    #[test]
    fn constant_half_classifier_returns_smallest_grid_point() {
        let scored = vec![(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        // All thresholds <= 0.5 predict everything positive with identical
        // F1; the tie resolves to the smallest grid point.
        assert_eq!(learn_threshold_from_scores(&scored).unwrap(), 0.01);
    }

    #[test]
    fn single_class_is_degenerate() {
        let scored = vec![(0.9, true), (0.8, true)];
        assert!(matches!(
            learn_threshold_from_scores(&scored),
            Err(PredictorError::DegenerateDataset)
        ));
    }
}
