//! Training loop: minibatch SGD with momentum over weighted BCE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::PredictorError;
use crate::features::FeatureVector;
use crate::lstm::{LstmConfig, LstmGradients, LstmModel};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Weight classes by inverse frequency to counter imbalance.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            learning_rate: 0.15,
            momentum: 0.9,
            batch_size: 32,
            seed: 1,
            class_weighting: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean training loss per epoch; index 0 is the pre-training loss.
    pub epoch_losses: Vec<f64>,
    pub final_accuracy: f64,
    pub parameter_count: usize,
    pub positives: usize,
    pub negatives: usize,
}

/// Per-class loss weights: inverse class frequency, normalized so the two
/// weights average to 1.
pub fn class_weights(dataset: &[(FeatureVector, bool)]) -> Result<(f64, f64), PredictorError> {
    let positives = dataset.iter().filter(|(_, y)| *y).count();
    let negatives = dataset.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(PredictorError::DegenerateDataset);
    }
    let n = dataset.len() as f64;
    Ok((n / (2.0 * positives as f64), n / (2.0 * negatives as f64)))
}

fn mean_loss(model: &LstmModel, dataset: &[(FeatureVector, bool)], w_pos: f64, w_neg: f64) -> f64 {
    dataset
        .iter()
        .map(|(fv, y)| model.loss(fv, *y, if *y { w_pos } else { w_neg }))
        .sum::<f64>()
        / dataset.len() as f64
}

fn accuracy(model: &LstmModel, dataset: &[(FeatureVector, bool)]) -> f64 {
    let correct = dataset
        .iter()
        .filter(|(fv, y)| {
            let p = model.forward_cached_prob(fv);
            (p > 0.5) == *y
        })
        .count();
    correct as f64 / dataset.len() as f64
}

impl LstmModel {
    fn forward_cached_prob(&self, fv: &FeatureVector) -> f64 {
        self.forward(fv).expect("dataset shapes are validated")
    }
}

/// Trains a freshly initialized model on the labeled dataset.
///
/// `epochs = 0` returns the seeded initial model with its loss evaluated
/// once. Training is single-threaded and bit-reproducible from the seed.
pub fn lstm_train(
    dataset: &[(FeatureVector, bool)],
    arch: LstmConfig,
    config: &TrainConfig,
) -> Result<(LstmModel, TrainReport), PredictorError> {
    let (w_pos, w_neg) = class_weights(dataset)?;
    let (w_pos, w_neg) = if config.class_weighting {
        (w_pos, w_neg)
    } else {
        (1.0, 1.0)
    };
    for (fv, _) in dataset {
        if fv.window != arch.seq_len || fv.values.len() != arch.seq_len * arch.input_dim {
            return Err(PredictorError::ShapeMismatch {
                expected: arch.seq_len * arch.input_dim,
                got: fv.values.len(),
            });
        }
    }

    let mut model = LstmModel::init(arch, config.seed);
    let mut velocity = LstmGradients::zeros(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_F00D);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    let mut epoch_losses = vec![mean_loss(&model, dataset, w_pos, w_neg)];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            let mut batch_grads = LstmGradients::zeros(&model);
            for &idx in chunk {
                let (fv, y) = &dataset[idx];
                let weight = if *y { w_pos } else { w_neg };
                let (_, grads) = model.loss_and_gradients(fv, *y, weight);
                batch_grads.add(&grads);
            }
            batch_grads.scale(1.0 / chunk.len() as f64);
            // Momentum update: v = m*v - lr*g; theta += v.
            velocity.scale(config.momentum);
            batch_grads.scale(-config.learning_rate);
            velocity.add(&batch_grads);
            apply_step(&mut model, &velocity);
        }
        epoch_losses.push(mean_loss(&model, dataset, w_pos, w_neg));
    }

    let positives = dataset.iter().filter(|(_, y)| *y).count();
    let report = TrainReport {
        final_accuracy: accuracy(&model, dataset),
        parameter_count: model.parameter_count(),
        positives,
        negatives: dataset.len() - positives,
        epoch_losses,
    };
    Ok((model, report))
}

fn apply_step(model: &mut LstmModel, step: &LstmGradients) {
    for (layer, g) in model.layers.iter_mut().zip(&step.layers) {
        for (w, d) in layer.w_x.iter_mut().zip(&g.w_x) {
            *w += d;
        }
        for (w, d) in layer.w_h.iter_mut().zip(&g.w_h) {
            *w += d;
        }
        for (w, d) in layer.b.iter_mut().zip(&g.b) {
            *w += d;
        }
    }
    for (w, d) in model.out_w.iter_mut().zip(&step.out_w) {
        *w += d;
    }
    model.out_b += step.out_b;
}
