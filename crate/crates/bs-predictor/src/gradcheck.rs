//! Numerical validation of the BPTT implementation.
//!
//! Analytic gradients are compared against central finite differences over a
//! random subset of weights. Relative error uses an absolute fallback: when
//! both gradients are below 1e-8 the comparison point counts as exact, which
//! covers saturated zero-gradient points.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureVector;
use crate::lstm::LstmModel;

pub const FD_STEP: f64 = 1e-5;
pub const ABS_FLOOR: f64 = 1e-8;

/// Relative error between an analytic and a numeric gradient value.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    if analytic.abs() < ABS_FLOOR && numeric.abs() < ABS_FLOOR {
        return 0.0;
    }
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs())
}

/// Central finite difference of the loss w.r.t. flat parameter `idx`.
pub fn numeric_gradient(
    model: &LstmModel,
    fv: &FeatureVector,
    label: bool,
    weight: f64,
    idx: usize,
) -> f64 {
    let mut params = model.flat_params();
    let original = params[idx];
    let mut probe = model.clone();

    params[idx] = original + FD_STEP;
    probe.set_flat_params(&params);
    let plus = probe.loss(fv, label, weight);

    params[idx] = original - FD_STEP;
    probe.set_flat_params(&params);
    let minus = probe.loss(fv, label, weight);

    (plus - minus) / (2.0 * FD_STEP)
}

/// Indices of the flat parameter vector selected for checking.
pub fn check_indices(model: &LstmModel, n_checks: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..model.parameter_count()).collect();
    indices.shuffle(&mut rng);
    indices.truncate(n_checks.min(indices.len()));
    indices
}

/// Maximum relative error between analytic and finite-difference gradients
/// over `n_checks` randomly selected weights (at least 100 in practice).
pub fn gradient_check(
    model: &LstmModel,
    fv: &FeatureVector,
    label: bool,
    n_checks: usize,
    seed: u64,
) -> f64 {
    let (_, grads) = model.loss_and_gradients(fv, label, 1.0);
    let flat = grads.flat();
    let mut max_err = 0.0f64;
    for idx in check_indices(model, n_checks, seed) {
        let numeric = numeric_gradient(model, fv, label, 1.0, idx);
        max_err = max_err.max(relative_error(flat[idx], numeric));
    }
    max_err
}
