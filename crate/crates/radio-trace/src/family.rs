//! Families of randomized generator configs.
//!
//! A family describes ranges for base-station layout and UE motion; each
//! index yields a deterministic per-trace config, so whole datasets are
//! reproducible from one seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::generator::{BaseStation, GeneratorConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFamily {
    pub seed: u64,
    #[serde(default = "default_bs_count")]
    pub bs_count: (usize, usize),
    /// Spacing between consecutive base stations along the corridor, meters.
    #[serde(default = "default_spacing")]
    pub bs_spacing_m: (f64, f64),
    /// Lateral offset range for base stations, meters.
    #[serde(default = "default_lateral")]
    pub bs_lateral_m: f64,
    #[serde(default = "default_speed")]
    pub ue_speed_mps: (f64, f64),
    #[serde(default = "default_tx")]
    pub tx_power_dbm: f64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default = "default_pl0")]
    pub reference_loss_db: f64,
    #[serde(default = "default_sigma")]
    pub shadowing_sigma_db: f64,
    #[serde(default = "default_interval")]
    pub sample_interval_ms: u64,
    #[serde(default = "default_hysteresis")]
    pub a3_hysteresis_db: f64,
    #[serde(default = "default_ttt")]
    pub time_to_trigger_ms: u64,
}

fn default_bs_count() -> (usize, usize) {
    (3, 5)
}
fn default_spacing() -> (f64, f64) {
    (450.0, 700.0)
}
fn default_lateral() -> f64 {
    120.0
}
fn default_speed() -> (f64, f64) {
    (15.0, 30.0)
}
fn default_tx() -> f64 {
    30.0
}
fn default_exponent() -> f64 {
    3.0
}
fn default_pl0() -> f64 {
    46.0
}
fn default_sigma() -> f64 {
    3.0
}
fn default_interval() -> u64 {
    50
}
fn default_hysteresis() -> f64 {
    3.0
}
fn default_ttt() -> u64 {
    160
}

impl Default for TraceFamily {
    fn default() -> Self {
        Self {
            seed: 1,
            bs_count: default_bs_count(),
            bs_spacing_m: default_spacing(),
            bs_lateral_m: default_lateral(),
            ue_speed_mps: default_speed(),
            tx_power_dbm: default_tx(),
            path_loss_exponent: default_exponent(),
            reference_loss_db: default_pl0(),
            shadowing_sigma_db: default_sigma(),
            sample_interval_ms: default_interval(),
            a3_hysteresis_db: default_hysteresis(),
            time_to_trigger_ms: default_ttt(),
        }
    }
}

impl TraceFamily {
    /// Deterministic config for trace `index` within the family.
    pub fn instance(&self, index: u64) -> GeneratorConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_mul(0xA076_1D64_78BD_642F)
                .wrapping_add(index),
        );
        let n_bs = rng.random_range(self.bs_count.0..=self.bs_count.1);
        let mut base_stations = Vec::with_capacity(n_bs);
        let mut x = 0.0;
        for i in 0..n_bs {
            if i > 0 {
                x += rng.random_range(self.bs_spacing_m.0..self.bs_spacing_m.1);
            }
            let y = rng.random_range(-self.bs_lateral_m..self.bs_lateral_m);
            base_stations.push(BaseStation {
                cell_id: i as u32 + 1,
                position: (x, y),
                tx_power_dbm: self.tx_power_dbm,
            });
        }
        let end_x = x;
        let path_y = rng.random_range(-self.bs_lateral_m..self.bs_lateral_m);
        let speed = rng.random_range(self.ue_speed_mps.0..self.ue_speed_mps.1);
        GeneratorConfig {
            base_stations,
            waypoints: vec![(2.0, path_y), (end_x.max(800.0) - 2.0, path_y)],
            speed_mps: speed,
            sample_interval_ms: self.sample_interval_ms,
            path_loss_exponent: self.path_loss_exponent,
            reference_loss_db: self.reference_loss_db,
            reference_distance_m: 1.0,
            shadowing_sigma_db: self.shadowing_sigma_db,
            a3_hysteresis_db: self.a3_hysteresis_db,
            time_to_trigger_ms: self.time_to_trigger_ms,
            detection_threshold_dbm: -120.0,
            seed: self.seed ^ (index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            duration_ms: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::generate_trace;

    #[test]
    fn family_instances_are_deterministic_and_varied() {
        let family = TraceFamily {
            seed: 99,
            ..Default::default()
        };
        let a = family.instance(0);
        let b = family.instance(0);
        assert_eq!(a.base_stations.len(), b.base_stations.len());
        assert_eq!(a.seed, b.seed);
        let c = family.instance(1);
        assert_ne!(a.seed, c.seed);
    }

    #[test]
    fn family_traces_mostly_contain_handovers() {
        let family = TraceFamily {
            seed: 5,
            ..Default::default()
        };
        let mut with_ho = 0;
        for idx in 0..20 {
            let trace = generate_trace(&family.instance(idx)).unwrap();
            trace.validate().unwrap();
            if !trace.handovers.is_empty() {
                with_ho += 1;
            }
        }
        assert!(with_ho >= 15, "only {with_ho}/20 traces had handovers");
    }
}
