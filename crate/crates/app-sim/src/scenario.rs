//! Scenario configuration.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::profile::StateProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Only a blocking sync once the handover completes.
    BaselineReactive,
    /// Background sync on the mobility hint, blocking sync at handover.
    TwoStep,
}

/// Where per-handover control-plane gaps come from.
#[derive(Debug, Clone, PartialEq)]
pub enum GapModel {
    Fixed(f64),
    /// Sampled uniformly (seeded) from an empirical distribution, e.g. a
    /// control-plane benchmark's completion series.
    Empirical(Vec<f64>),
}

impl Default for GapModel {
    fn default() -> Self {
        GapModel::Fixed(10.0)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub profile: StateProfile,
    /// Client request period in milliseconds.
    pub client_interval_ms: f64,
    /// Client-to-edge round trip in milliseconds.
    pub client_rtt_ms: f64,
    /// Inter-edge link.
    pub bandwidth_bps: f64,
    pub latency_ms: f64,
    /// Lead time of the mobility hint before each handover.
    pub hint_horizon_ms: f64,
    pub handovers: usize,
    pub first_handover_ms: f64,
    pub handover_period_ms: f64,
    /// Extra simulated time after the last handover completes.
    pub tail_ms: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Probability that a hint names the wrong edge host.
    pub misprediction_rate: f64,
    /// Probability that an update event deletes the key instead (it is
    /// re-created on its next update), exercising tombstone propagation.
    pub churn_delete_prob: f64,
    pub gap: GapModel,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            profile: StateProfile::carmap_like(),
            client_interval_ms: 0.5,
            client_rtt_ms: 2.0,
            bandwidth_bps: 1e9,
            latency_ms: 1.0,
            hint_horizon_ms: 100.0,
            handovers: 1,
            first_handover_ms: 1_500.0,
            handover_period_ms: 1_000.0,
            tail_ms: 300.0,
            seed: 1,
            mode: Mode::TwoStep,
            misprediction_rate: 0.0,
            churn_delete_prob: 0.0,
            gap: GapModel::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.profile.validate()?;
        if self.bandwidth_bps <= 0.0 {
            return Err(SimError::InvalidScenario("bandwidth must be positive".into()));
        }
        if self.hint_horizon_ms < 0.0 {
            return Err(SimError::InvalidScenario("hint horizon must be >= 0".into()));
        }
        if self.client_interval_ms <= 0.0 || self.client_rtt_ms < 0.0 {
            return Err(SimError::InvalidScenario("client timing invalid".into()));
        }
        if !(0.0..=1.0).contains(&self.misprediction_rate)
            || !(0.0..=1.0).contains(&self.churn_delete_prob)
        {
            return Err(SimError::InvalidScenario("probabilities must be in [0,1]".into()));
        }
        if self.handovers > 0 && self.first_handover_ms <= self.hint_horizon_ms {
            return Err(SimError::InvalidScenario(
                "first handover must come after the hint horizon".into(),
            ));
        }
        if let GapModel::Empirical(samples) = &self.gap {
            if samples.is_empty() {
                return Err(SimError::InvalidScenario("empirical gap model is empty".into()));
            }
        }
        Ok(())
    }
}
