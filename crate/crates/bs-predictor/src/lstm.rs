//! Stacked LSTM binary classifier, implemented from scratch on f64.
//!
//! Architecture: `layers` stacked LSTM layers of `hidden` units over a
//! sequence of `seq_len` timesteps with `input_dim` features each, followed
//! by a dense sigmoid head on the final hidden state. Training runs
//! backpropagation through time; gradients are verified against central
//! finite differences in `gradcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::PredictorError;
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub seq_len: usize,
}

impl LstmConfig {
    pub fn new(input_dim: usize, hidden: usize, layers: usize, seq_len: usize) -> Self {
        assert!(input_dim > 0 && hidden > 0 && layers > 0 && seq_len > 0);
        Self {
            input_dim,
            hidden,
            layers,
            seq_len,
        }
    }
}

/// One layer's parameters. Gate rows are ordered `[i; f; g; o]`, each block
/// `hidden` rows tall.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// `[4*hidden x in_dim]`, row-major.
    pub w_x: Vec<f64>,
    /// `[4*hidden x hidden]`, row-major.
    pub w_h: Vec<f64>,
    /// `[4*hidden]`.
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub layers: Vec<LstmLayer>,
    /// Dense head over the final hidden state.
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    /// Xavier-uniform initialization, forget-gate bias 1. Reproducible from
    /// the seed.
    pub fn init(config: LstmConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let in_dim = if l == 0 { config.input_dim } else { config.hidden };
            let h = config.hidden;
            let scale_x = (6.0 / (in_dim + 4 * h) as f64).sqrt();
            let scale_h = (6.0 / (h + 4 * h) as f64).sqrt();
            let w_x = (0..4 * h * in_dim)
                .map(|_| rng.random_range(-scale_x..scale_x))
                .collect();
            let w_h = (0..4 * h * h)
                .map(|_| rng.random_range(-scale_h..scale_h))
                .collect();
            let mut b = vec![0.0; 4 * h];
            // Forget gate bias starts open.
            for bi in b.iter_mut().skip(h).take(h) {
                *bi = 1.0;
            }
            layers.push(LstmLayer {
                w_x,
                w_h,
                b,
                in_dim,
                hidden: h,
            });
        }
        let scale_out = (6.0 / (config.hidden + 1) as f64).sqrt();
        let out_w = (0..config.hidden)
            .map(|_| rng.random_range(-scale_out..scale_out))
            .collect();
        Self {
            config,
            layers,
            out_w,
            out_b: 0.0,
        }
    }

    /// All-zero weights; forward output is exactly sigmoid(0) = 0.5.
    pub fn zeroed(config: LstmConfig) -> Self {
        let layers = (0..config.layers)
            .map(|l| {
                let in_dim = if l == 0 { config.input_dim } else { config.hidden };
                LstmLayer {
                    w_x: vec![0.0; 4 * config.hidden * in_dim],
                    w_h: vec![0.0; 4 * config.hidden * config.hidden],
                    b: vec![0.0; 4 * config.hidden],
                    in_dim,
                    hidden: config.hidden,
                }
            })
            .collect();
        Self {
            config,
            layers,
            out_w: vec![0.0; config.hidden],
            out_b: 0.0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w_x.len() + l.w_h.len() + l.b.len())
            .sum::<usize>()
            + self.out_w.len()
            + 1
    }

    fn check_shape(&self, fv: &FeatureVector) -> Result<(), PredictorError> {
        let expected = self.config.seq_len * self.config.input_dim;
        if fv.window != self.config.seq_len || fv.values.len() != expected {
            return Err(PredictorError::ShapeMismatch {
                expected,
                got: fv.values.len(),
            });
        }
        Ok(())
    }

    /// Deterministic forward pass; output strictly inside (0,1).
    pub fn forward(&self, fv: &FeatureVector) -> Result<f64, PredictorError> {
        self.check_shape(fv)?;
        Ok(self.forward_cached(fv).prob)
    }

    pub(crate) fn forward_cached(&self, fv: &FeatureVector) -> ForwardCache {
        let cfg = &self.config;
        let h = cfg.hidden;
        let mut steps: Vec<Vec<StepCache>> = Vec::with_capacity(cfg.layers);
        let mut layer_input: Vec<Vec<f64>> = (0..cfg.seq_len)
            .map(|t| fv.values[t * cfg.input_dim..(t + 1) * cfg.input_dim].to_vec())
            .collect();

        for layer in &self.layers {
            let mut h_state = vec![0.0; h];
            let mut c_state = vec![0.0; h];
            let mut layer_steps = Vec::with_capacity(cfg.seq_len);
            let mut next_input = Vec::with_capacity(cfg.seq_len);
            for x in &layer_input {
                let mut gates = layer.b.clone();
                matvec_add(&layer.w_x, x, &mut gates);
                matvec_add(&layer.w_h, &h_state, &mut gates);
                let mut i_g = vec![0.0; h];
                let mut f_g = vec![0.0; h];
                let mut g_g = vec![0.0; h];
                let mut o_g = vec![0.0; h];
                for j in 0..h {
                    i_g[j] = sigmoid(gates[j]);
                    f_g[j] = sigmoid(gates[h + j]);
                    g_g[j] = gates[2 * h + j].tanh();
                    o_g[j] = sigmoid(gates[3 * h + j]);
                }
                let c_prev = c_state.clone();
                let h_prev = h_state.clone();
                let mut tanh_c = vec![0.0; h];
                for j in 0..h {
                    c_state[j] = f_g[j] * c_prev[j] + i_g[j] * g_g[j];
                    tanh_c[j] = c_state[j].tanh();
                    h_state[j] = o_g[j] * tanh_c[j];
                }
                next_input.push(h_state.clone());
                layer_steps.push(StepCache {
                    x: x.clone(),
                    h_prev,
                    c_prev,
                    i_g,
                    f_g,
                    g_g,
                    o_g,
                    c: c_state.clone(),
                    tanh_c,
                });
            }
            steps.push(layer_steps);
            layer_input = next_input;
        }

        let h_final = layer_input.last().expect("seq_len >= 1").clone();
        let logit = self
            .out_w
            .iter()
            .zip(&h_final)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.out_b;
        let prob = sigmoid(logit);
        ForwardCache {
            steps,
            h_final,
            prob,
        }
    }

    /// Weighted binary cross-entropy loss for one example.
    pub fn loss(&self, fv: &FeatureVector, label: bool, weight: f64) -> f64 {
        let p = self.forward_cached(fv).prob.clamp(1e-12, 1.0 - 1e-12);
        if label {
            -weight * p.ln()
        } else {
            -weight * (1.0 - p).ln()
        }
    }

    /// Loss and its gradient w.r.t. every parameter, via BPTT.
    pub fn loss_and_gradients(
        &self,
        fv: &FeatureVector,
        label: bool,
        weight: f64,
    ) -> (f64, LstmGradients) {
        let cache = self.forward_cached(fv);
        let p = cache.prob.clamp(1e-12, 1.0 - 1e-12);
        let y = if label { 1.0 } else { 0.0 };
        let loss = if label {
            -weight * p.ln()
        } else {
            -weight * (1.0 - p).ln()
        };
        // d(loss)/d(logit) for sigmoid + weighted BCE.
        let dlogit = weight * (cache.prob - y);

        let mut grads = LstmGradients::zeros(self);
        let h = self.config.hidden;
        let seq = self.config.seq_len;

        for j in 0..h {
            grads.out_w[j] = dlogit * cache.h_final[j];
        }
        grads.out_b = dlogit;

        // dh injected into each layer at each timestep from the layer above
        // (or from the output head for the top layer at the final step).
        let mut dh_inject: Vec<Vec<f64>> = vec![vec![0.0; h]; seq];
        for j in 0..h {
            dh_inject[seq - 1][j] = dlogit * self.out_w[j];
        }

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let lg = &mut grads.layers[l];
            let steps = &cache.steps[l];
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut dx_below: Vec<Vec<f64>> = vec![vec![0.0; layer.in_dim]; seq];
            for t in (0..seq).rev() {
                let s = &steps[t];
                let mut dh = dh_next.clone();
                for j in 0..h {
                    dh[j] += dh_inject[t][j];
                }
                let mut dz = vec![0.0; 4 * h];
                let mut dc = dc_next.clone();
                for j in 0..h {
                    let d_o = dh[j] * s.tanh_c[j];
                    dc[j] += dh[j] * s.o_g[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                    let d_i = dc[j] * s.g_g[j];
                    let d_g = dc[j] * s.i_g[j];
                    let d_f = dc[j] * s.c_prev[j];
                    dz[j] = d_i * s.i_g[j] * (1.0 - s.i_g[j]);
                    dz[h + j] = d_f * s.f_g[j] * (1.0 - s.f_g[j]);
                    dz[2 * h + j] = d_g * (1.0 - s.g_g[j] * s.g_g[j]);
                    dz[3 * h + j] = d_o * s.o_g[j] * (1.0 - s.o_g[j]);
                }
                // Accumulate parameter gradients.
                for r in 0..4 * h {
                    let dzr = dz[r];
                    if dzr != 0.0 {
                        let row_x = &mut lg.w_x[r * layer.in_dim..(r + 1) * layer.in_dim];
                        for (c, xv) in s.x.iter().enumerate() {
                            row_x[c] += dzr * xv;
                        }
                        let row_h = &mut lg.w_h[r * h..(r + 1) * h];
                        for (c, hv) in s.h_prev.iter().enumerate() {
                            row_h[c] += dzr * hv;
                        }
                        lg.b[r] += dzr;
                    }
                }
                // Propagate to x, previous h and previous c.
                let dx = &mut dx_below[t];
                for r in 0..4 * h {
                    let dzr = dz[r];
                    if dzr != 0.0 {
                        let row_x = &layer.w_x[r * layer.in_dim..(r + 1) * layer.in_dim];
                        for (c, dxc) in dx.iter_mut().enumerate() {
                            *dxc += dzr * row_x[c];
                        }
                    }
                }
                let mut dh_prev = vec![0.0; h];
                for r in 0..4 * h {
                    let dzr = dz[r];
                    if dzr != 0.0 {
                        let row_h = &layer.w_h[r * h..(r + 1) * h];
                        for (c, dhp) in dh_prev.iter_mut().enumerate() {
                            *dhp += dzr * row_h[c];
                        }
                    }
                }
                for j in 0..h {
                    dc_next[j] = dc[j] * s.f_g[j];
                }
                dh_next = dh_prev;
            }
            dh_inject = dx_below;
        }
        (loss, grads)
    }

    // ---- flat parameter access (training, checkpointing, grad checks) ----

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w_x);
            out.extend_from_slice(&l.w_h);
            out.extend_from_slice(&l.b);
        }
        out.extend_from_slice(&self.out_w);
        out.push(self.out_b);
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameter_count());
        let mut pos = 0;
        for l in &mut self.layers {
            let (nx, nh, nb) = (l.w_x.len(), l.w_h.len(), l.b.len());
            l.w_x.copy_from_slice(&flat[pos..pos + nx]);
            pos += nx;
            l.w_h.copy_from_slice(&flat[pos..pos + nh]);
            pos += nh;
            l.b.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        let nw = self.out_w.len();
        self.out_w.copy_from_slice(&flat[pos..pos + nw]);
        pos += nw;
        self.out_b = flat[pos];
    }
}

/// `out += M x`, with `M` row-major `[rows x cols]`.
fn matvec_add(m: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o += acc;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i_g: Vec<f64>,
    f_g: Vec<f64>,
    g_g: Vec<f64>,
    o_g: Vec<f64>,
    #[allow(dead_code)]
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    steps: Vec<Vec<StepCache>>,
    h_final: Vec<f64>,
    pub prob: f64,
}

/// Gradient mirror of the model parameters.
#[derive(Debug, Clone)]
pub struct LstmGradients {
    pub layers: Vec<LayerGradients>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl LstmGradients {
    pub fn zeros(model: &LstmModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGradients {
                    w_x: vec![0.0; l.w_x.len()],
                    w_h: vec![0.0; l.w_h.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
            out_w: vec![0.0; model.out_w.len()],
            out_b: 0.0,
        }
    }

    pub fn add(&mut self, other: &LstmGradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.w_x.iter_mut().zip(&b.w_x) {
                *x += y;
            }
            for (x, y) in a.w_h.iter_mut().zip(&b.w_h) {
                *x += y;
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
        for (x, y) in self.out_w.iter_mut().zip(&other.out_w) {
            *x += y;
        }
        self.out_b += other.out_b;
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for x in l.w_x.iter_mut().chain(l.w_h.iter_mut()).chain(l.b.iter_mut()) {
                *x *= factor;
            }
        }
        for x in &mut self.out_w {
            *x *= factor;
        }
        self.out_b *= factor;
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.w_x);
            out.extend_from_slice(&l.w_h);
            out.extend_from_slice(&l.b);
        }
        out.extend_from_slice(&self.out_w);
        out.push(self.out_b);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(seq: usize, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            window: seq,
            values,
        }
    }

    #[test]
    fn zero_model_outputs_half() {
        let model = LstmModel::zeroed(LstmConfig::new(4, 8, 2, 3));
        let input = fv(3, vec![0.3; 12]);
        assert_eq!(model.forward(&input).unwrap(), 0.5);
    }

    #[test]
    fn forward_is_deterministic_and_bounded() {
        let model = LstmModel::init(LstmConfig::new(4, 16, 2, 6), 7);
        let input = fv(6, (0..24).map(|i| (i as f64) / 24.0).collect());
        let a = model.forward(&input).unwrap();
        let b = model.forward(&input).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let model = LstmModel::init(LstmConfig::new(4, 8, 1, 6), 1);
        let bad = fv(5, vec![0.1; 20]);
        assert!(matches!(
            model.forward(&bad),
            Err(PredictorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn parameter_count_matches_architecture() {
        let model = LstmModel::init(LstmConfig::new(4, 32, 2, 6), 0);
        // layer 1: 4*32*4 + 4*32*32 + 128 = 4736
        // layer 2: 4*32*32 + 4*32*32 + 128 = 8320
        // head: 32 + 1 = 33
        assert_eq!(model.parameter_count(), 4736 + 8320 + 33);
        assert_eq!(model.flat_params().len(), model.parameter_count());
    }

    #[test]
    fn flat_params_roundtrip() {
        let model = LstmModel::init(LstmConfig::new(3, 5, 2, 4), 3);
        let mut clone = LstmModel::zeroed(model.config);
        clone.set_flat_params(&model.flat_params());
        assert_eq!(clone, model);
    }
}
