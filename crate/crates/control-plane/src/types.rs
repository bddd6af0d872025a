//! Control-plane domain types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// UE priority class. HP is reserved for devices with an active
/// latency-sensitive session, promoted from MP by the application function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UeClass {
    Hp,
    Mp,
    Lp,
}

impl UeClass {
    pub fn index(self) -> usize {
        match self {
            UeClass::Hp => 0,
            UeClass::Mp => 1,
            UeClass::Lp => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UeClass::Hp => "HP",
            UeClass::Mp => "MP",
            UeClass::Lp => "LP",
        }
    }
}

/// Processing stages a control message can queue at. The BS keeps separate
/// queues for RRC traffic and for NG-AP traffic from the AMF; the AMF queues
/// NG-AP traffic from the BS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    RrcAtBs,
    NgapAtAmf,
    NgapAtBs,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::RrcAtBs, Stage::NgapAtAmf, Stage::NgapAtBs];

    pub fn index(self) -> usize {
        match self {
            Stage::RrcAtBs => 0,
            Stage::NgapAtAmf => 1,
            Stage::NgapAtBs => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Procedure {
    Handover,
    Attach,
    Other,
}

/// One control-plane work item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlMessage {
    pub ue_id: u64,
    pub stage: Stage,
    pub procedure: Procedure,
    /// Step index within the procedure's pipeline.
    pub step: u8,
    /// Time the message entered its stage queue, microseconds.
    pub enqueue_us: u64,
    pub service_us: u64,
    pub klass: UeClass,
    /// Procedure instance this message belongs to.
    pub procedure_id: u64,
}

/// Weighted scheduling configuration: slot weights per 10-slot cycle and the
/// per-stage service rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// (HP, MP, LP) slots per cycle; must sum to 10.
    pub weights: (u8, u8, u8),
    /// Messages per second one stage server can process.
    pub service_rate_per_s: f64,
    /// Unused slots fall through to other classes (work conservation).
    pub fallback: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            weights: (6, 3, 1),
            service_rate_per_s: 10_000.0,
            fallback: true,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), CpError> {
        let (hp, mp, lp) = self.weights;
        if hp + mp + lp != 10 {
            return Err(CpError::InvalidConfig(format!(
                "weights must sum to 10, got {}",
                hp + mp + lp
            )));
        }
        if self.service_rate_per_s <= 0.0 {
            return Err(CpError::InvalidConfig("service rate must be positive".into()));
        }
        Ok(())
    }

    pub fn service_us(&self) -> u64 {
        (1_000_000.0 / self.service_rate_per_s).round().max(1.0) as u64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CpError {
    #[error("unknown ip address")]
    UnknownIp,
    #[error("ue base class is not eligible for promotion")]
    NotEligible,
    #[error("unknown ue")]
    UnknownUe,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
