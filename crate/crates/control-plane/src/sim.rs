//! Event-driven control-plane latency simulation.
//!
//! A handover procedure is a fixed pipeline of four control messages
//! traversing RRC at the source BS, NG-AP at the AMF, NG-AP at the target
//! BS and RRC again. Each message takes a propagation delay to reach its
//! stage and a deterministic service time at the stage's single server;
//! queues follow the configured discipline. The clock is integer
//! microseconds and every run is reproducible from its seed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::registry::Registry;
use crate::sched::{Discipline, FifoScheduler, WeightedScheduler};
use crate::types::{ControlMessage, CpError, Procedure, SchedulerConfig, Stage, UeClass};

/// Stage sequence of one handover procedure.
pub const HANDOVER_PIPELINE: [Stage; 4] = [
    Stage::RrcAtBs,
    Stage::NgapAtAmf,
    Stage::NgapAtBs,
    Stage::RrcAtBs,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisciplineKind {
    Priority,
    Fifo,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scheduler: SchedulerConfig,
    /// Per-hop propagation delay in microseconds.
    pub propagation_us: u64,
    pub discipline: DisciplineKind,
    /// Record (ue, class-queue) per dequeue for trace assertions.
    pub record_dequeues: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheduler: SchedulerConfig::default(),
            propagation_us: 1_000,
            discipline: DisciplineKind::Priority,
            record_dequeues: false,
        }
    }
}

/// Offered load for a benchmark run.
#[derive(Debug, Clone)]
pub struct LoadConfig {
    pub procedures_per_s: f64,
    /// (HP, MP, LP) fractions; the projected IoT workload is 12/28/60.
    pub class_mix: (f64, f64, f64),
    pub pattern: Pattern,
    pub duration_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub enum Pattern {
    Uniform,
    /// Batch-Poisson arrivals with geometric batch sizes of this mean.
    Bursty { mean_batch: f64 },
}

impl LoadConfig {
    pub fn validate(&self) -> Result<(), CpError> {
        let (hp, mp, lp) = self.class_mix;
        if hp < 0.0 || mp < 0.0 || lp < 0.0 || (hp + mp + lp - 1.0).abs() > 1e-9 {
            return Err(CpError::InvalidConfig("class mix must sum to 1".into()));
        }
        if self.procedures_per_s < 0.0 || self.duration_s <= 0.0 {
            return Err(CpError::InvalidConfig("load must be non-negative, duration positive".into()));
        }
        if let Pattern::Bursty { mean_batch } = self.pattern {
            if mean_batch < 1.0 {
                return Err(CpError::InvalidConfig("mean batch must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Procedure capacity of the pipeline in procedures per second: the RRC
/// stage serves two messages per handover, so it binds first.
pub fn procedure_capacity_per_s(scheduler: &SchedulerConfig) -> f64 {
    scheduler.service_rate_per_s / 2.0
}

#[derive(Debug)]
enum EventKind {
    ProcStart {
        klass: UeClass,
        ue_id: u64,
        proc_id: u64,
    },
    MsgArrive {
        msg: ControlMessage,
    },
    ServiceDone {
        stage: Stage,
    },
    SetPriority {
        ip: String,
    },
    RevertPriority {
        ip: String,
    },
}

struct Event {
    t_us: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.t_us == other.t_us && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.t_us, self.seq).cmp(&(other.t_us, other.seq))
    }
}

struct ProcState {
    start_us: u64,
    klass: UeClass,
    ue_id: u64,
}

struct StageState {
    discipline: Box<dyn Discipline>,
    busy: Option<ControlMessage>,
}

/// Per-class completion-time series.
#[derive(Debug, Clone, Default)]
pub struct SimResult {
    /// Sorted completion times (ms) per class index (HP, MP, LP).
    pub completions_ms: [Vec<f64>; 3],
    pub served_messages: u64,
    /// (ue_id, class queue) per dequeue, when recording was enabled.
    pub dequeue_log: Vec<(u64, UeClass)>,
}

impl SimResult {
    pub fn class(&self, klass: UeClass) -> &[f64] {
        &self.completions_ms[klass.index()]
    }

    pub fn all_completions(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .completions_ms
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        all
    }
}

/// Quantile of an already-sorted slice (nearest-rank interpolation).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let f = pos - lo as f64;
        sorted[lo] * (1.0 - f) + sorted[hi] * f
    }
}

pub fn median(sorted: &[f64]) -> f64 {
    percentile(sorted, 0.5)
}

/// The discrete-event engine. Procedures can be injected directly
/// ([`Sim::run_handover`]) or generated from a [`LoadConfig`]
/// ([`simulate`]).
pub struct Sim {
    config: SimConfig,
    pub registry: Registry,
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    next_sched_id: u64,
    now_us: u64,
    stages: BTreeMap<usize, StageState>,
    procs: BTreeMap<u64, ProcState>,
    result: SimResult,
    last_completed: Option<(u64, f64)>,
}

impl Sim {
    pub fn new(config: SimConfig, registry: Registry) -> Self {
        config.scheduler.validate().expect("valid scheduler config");
        let mut stages = BTreeMap::new();
        for stage in Stage::ALL {
            let discipline: Box<dyn Discipline> = match config.discipline {
                DisciplineKind::Priority => Box::new(WeightedScheduler::new(&config.scheduler)),
                DisciplineKind::Fifo => Box::new(FifoScheduler::new()),
            };
            stages.insert(stage.index(), StageState {
                discipline,
                busy: None,
            });
        }
        Self {
            config,
            registry,
            heap: BinaryHeap::new(),
            next_seq: 0,
            next_sched_id: 0,
            now_us: 0,
            stages,
            procs: BTreeMap::new(),
            result: SimResult::default(),
            last_completed: None,
        }
    }

    fn push(&mut self, t_us: u64, kind: EventKind) {
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            t_us,
            seq: self.next_seq,
            kind,
        }));
    }

    /// Schedules a handover procedure start, returning its procedure id.
    /// The class is resolved from the registry for attached UEs at start
    /// time, else from `klass`.
    pub fn schedule_handover(&mut self, t_us: u64, ue_id: u64, klass: UeClass) -> u64 {
        self.next_sched_id += 1;
        let proc_id = self.next_sched_id;
        self.push(t_us, EventKind::ProcStart { klass, ue_id, proc_id });
        proc_id
    }

    /// Schedules an AF priority command; it takes effect at its timestamp.
    pub fn schedule_set_priority(&mut self, t_us: u64, ip: &str) {
        self.push(t_us, EventKind::SetPriority { ip: ip.to_string() });
    }

    pub fn schedule_revert_priority(&mut self, t_us: u64, ip: &str) {
        self.push(t_us, EventKind::RevertPriority { ip: ip.to_string() });
    }

    /// Injects one handover for an attached UE at `now_us` and runs until it
    /// completes, returning its completion time in milliseconds.
    pub fn run_handover(&mut self, ue_id: u64, now_us: u64) -> Result<f64, CpError> {
        if !self.registry.contains(ue_id) {
            return Err(CpError::UnknownUe);
        }
        let klass = self.registry.klass_of(ue_id)?;
        self.schedule_handover(now_us.max(self.now_us), ue_id, klass);
        let proc_id = self.next_sched_id;
        while self.step() {
            if let Some((done_id, ms)) = self.last_completed {
                if done_id == proc_id {
                    return Ok(ms);
                }
            }
        }
        unreachable!("injected procedure always completes");
    }

    /// Runs every pending event to completion.
    pub fn drain(&mut self) {
        while self.step() {}
    }

    pub fn into_result(mut self) -> SimResult {
        for series in &mut self.result.completions_ms {
            series.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        }
        self.result
    }

    fn step(&mut self) -> bool {
        let Some(Reverse(event)) = self.heap.pop() else {
            return false;
        };
        debug_assert!(event.t_us >= self.now_us, "time must not run backwards");
        self.now_us = event.t_us;
        match event.kind {
            EventKind::ProcStart { klass, ue_id, proc_id } => {
                let klass = self.registry.klass_of(ue_id).unwrap_or(klass);
                self.procs.insert(proc_id, ProcState {
                    start_us: self.now_us,
                    klass,
                    ue_id,
                });
                self.emit_step(proc_id, 0);
            }
            EventKind::MsgArrive { mut msg } => {
                msg.enqueue_us = self.now_us;
                let stage = &mut self.stages.get_mut(&msg.stage.index()).expect("stage");
                stage.discipline.enqueue(msg);
                if stage.busy.is_none() {
                    self.start_service(msg.stage);
                }
            }
            EventKind::ServiceDone { stage } => {
                let state = self.stages.get_mut(&stage.index()).expect("stage");
                let msg = state.busy.take().expect("server was busy");
                self.result.served_messages += 1;
                let step = msg.step + 1;
                if (step as usize) < HANDOVER_PIPELINE.len() {
                    self.emit_step(msg.procedure_id, step);
                } else {
                    let proc = self
                        .procs
                        .remove(&msg.procedure_id)
                        .expect("procedure in flight");
                    let completion_ms = (self.now_us - proc.start_us) as f64 / 1_000.0;
                    self.result.completions_ms[proc.klass.index()].push(completion_ms);
                    self.last_completed = Some((msg.procedure_id, completion_ms));
                }
                self.start_service(stage);
            }
            EventKind::SetPriority { ip } => {
                if let Err(err) = self.registry.set_priority(&ip) {
                    log::warn!("set_priority({ip}) failed: {err}");
                }
            }
            EventKind::RevertPriority { ip } => {
                if let Err(err) = self.registry.revert_priority(&ip) {
                    log::warn!("revert_priority({ip}) failed: {err}");
                }
            }
        }
        true
    }

    fn emit_step(&mut self, proc_id: u64, step: u8) {
        let proc = &self.procs[&proc_id];
        // The class is re-read per message so a priority change applies to
        // every message enqueued afterwards.
        let klass = self
            .registry
            .klass_of(proc.ue_id)
            .unwrap_or(proc.klass);
        let msg = ControlMessage {
            ue_id: proc.ue_id,
            stage: HANDOVER_PIPELINE[step as usize],
            procedure: Procedure::Handover,
            step,
            enqueue_us: 0,
            service_us: self.config.scheduler.service_us(),
            klass,
            procedure_id: proc_id,
        };
        self.push(self.now_us + self.config.propagation_us, EventKind::MsgArrive { msg });
    }

    fn start_service(&mut self, stage: Stage) {
        let record = self.config.record_dequeues;
        let state = self.stages.get_mut(&stage.index()).expect("stage");
        if state.busy.is_some() {
            return;
        }
        if let Some(msg) = state.discipline.schedule_next() {
            if record {
                self.result.dequeue_log.push((msg.ue_id, msg.klass));
            }
            let done_at = self.now_us + msg.service_us;
            state.busy = Some(msg);
            self.push(done_at, EventKind::ServiceDone { stage });
        }
    }
}

/// Runs a seeded load benchmark and returns per-class completion series.
/// Arrivals stop after `duration_s`; the run drains to completion so every
/// procedure is measured.
pub fn simulate(load: &LoadConfig, config: &SimConfig) -> Result<SimResult, CpError> {
    load.validate()?;
    config.scheduler.validate()?;
    let mut sim = Sim::new(config.clone(), Registry::new());
    let mut rng = ChaCha8Rng::seed_from_u64(load.seed);
    let horizon_us = (load.duration_s * 1e6) as u64;
    let mut t = 0.0f64;
    let mut ue_counter = 1_000_000u64;

    let (batch_rate, mean_batch) = match load.pattern {
        Pattern::Uniform => (load.procedures_per_s, 1.0),
        Pattern::Bursty { mean_batch } => (load.procedures_per_s / mean_batch, mean_batch),
    };
    if batch_rate > 0.0 {
        loop {
            t += exponential(&mut rng, batch_rate);
            let t_us = (t * 1e6) as u64;
            if t_us >= horizon_us {
                break;
            }
            let batch = match load.pattern {
                Pattern::Uniform => 1,
                Pattern::Bursty { .. } => geometric(&mut rng, mean_batch),
            };
            for _ in 0..batch {
                let klass = draw_class(&mut rng, load.class_mix);
                ue_counter += 1;
                sim.schedule_handover(t_us, ue_counter, klass);
            }
        }
    }
    sim.drain();
    Ok(sim.into_result())
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    -u.ln() / rate
}

fn geometric(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    let p = (1.0 / mean).clamp(1e-9, 1.0);
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    (u.ln() / (1.0 - p).ln()).floor() as u64 + 1
}

fn draw_class(rng: &mut ChaCha8Rng, mix: (f64, f64, f64)) -> UeClass {
    let u: f64 = rng.random();
    if u < mix.0 {
        UeClass::Hp
    } else if u < mix.0 + mix.1 {
        UeClass::Mp
    } else {
        UeClass::Lp
    }
}
