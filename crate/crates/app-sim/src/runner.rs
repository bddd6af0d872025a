//! Deterministic scenario execution.
//!
//! One user's stateful app serves from an edge host while a client issues
//! requests on a fixed period and the server overwrites state objects at
//! their configured Poisson rates. Scheduled handovers move the user between
//! edge hosts: in two-step mode a mobility hint fires `hint_horizon_ms`
//! early and starts a background sync (possibly toward a mispredicted
//! host), the handover signal opens the client outage window and, after the
//! control-plane gap elapses, a blocking sync transfers the residual dirty
//! state to the true target. Downtime is measured from client requests:
//! first unanswered to first answered.
//!
//! Everything runs against one event heap with an integer-microsecond
//! clock. Store timestamps use a strictly increasing tick derived from the
//! clock so that an update landing after a snapshot in event order is never
//! mistaken for synced state.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bs_predictor::HandoverPrediction;
use edge_store::wire::SyncPhase;
use edge_store::{Frame, Receiver, SessionStep, SourceSession, Store};
use mobility::{EdgeTopology, MobilityHandler};

use crate::error::SimError;
use crate::link::Link;
use crate::measure::{state_digest, HandoverMeasurement, Measurements};
use crate::scenario::{GapModel, Mode, Scenario};

const USER: &str = "u1";
const HOSTS: [&str; 3] = ["edge-a", "edge-b", "edge-c"];
/// Cells 1..=3 map one-to-one onto the hosts; cell 3 is the wrong-host
/// candidate used for misprediction injection.
const CELLS: [u32; 3] = [1, 2, 3];
const BG_WINDOW: usize = 64;
const BLOCKING_WINDOW: usize = 1 << 20;

#[derive(Debug)]
enum Ev {
    ClientTick,
    Update { obj: usize },
    Hint { ho: usize },
    Handover { ho: usize },
    BlockingStart { ho: usize },
    FrameDeliver { key: u64, frame: Frame },
    AckDeliver { key: u64, frame: Frame },
}

struct Event {
    t_us: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.t_us, self.seq) == (other.t_us, other.seq)
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

struct ObjectState {
    key: Vec<u8>,
    size: usize,
    rate: f64,
    counter: u64,
    alive: bool,
}

struct HandoverPlan {
    t_us: u64,
    to_cell: u32,
    predicted_cell: u32,
    gap_us: u64,
}

struct SessionCtx {
    session: SourceSession,
    src: &'static str,
    dst: &'static str,
    ho: Option<usize>,
    started_us: u64,
    freeze_digest: [u8; 32],
}

struct Outage {
    ho: usize,
    first_miss_us: Option<u64>,
    /// Set once the blocking sync committed and the reconnect elapsed.
    ready_at_us: Option<u64>,
    gap_ms: f64,
    blocking: Option<(f64, u64, bool)>, // (blocking_ms, residual, checksum_ok)
    mispredicted: bool,
}

struct Runner {
    scenario: Scenario,
    now_us: u64,
    store_ts: u64,
    seq: u64,
    heap: BinaryHeap<Reverse<Event>>,
    stores: BTreeMap<&'static str, Store>,
    links: BTreeMap<(&'static str, &'static str), Link>,
    handler: MobilityHandler,
    objects: Vec<ObjectState>,
    plan: Vec<HandoverPlan>,
    current_cell: u32,
    sessions: BTreeMap<u64, SessionCtx>,
    receivers: BTreeMap<u64, Receiver>,
    next_session_key: u64,
    bg_key: Option<u64>,
    /// Most recent background session and destination, kept past completion
    /// for misprediction cleanup at the next handover signal.
    last_bg: Option<(u64, &'static str)>,
    finished: std::collections::BTreeSet<u64>,
    bg_keys_accum: u64,
    outage: Option<Outage>,
    horizon_us: u64,
    rng: ChaCha8Rng,
    meas: Measurements,
}

fn host_of(cell: u32) -> &'static str {
    HOSTS[(cell - 1) as usize]
}

impl Runner {
    fn new(scenario: &Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut topology = EdgeTopology::new();
        for (idx, cell) in CELLS.iter().enumerate() {
            topology.insert(*cell, HOSTS[idx], 7000 + idx as u16);
        }
        let mut handler = MobilityHandler::new(topology);
        handler.set_serving(USER, CELLS[0]);

        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

        // Pre-draw the whole handover plan so later event-time draws cannot
        // perturb it.
        let mut plan = Vec::with_capacity(scenario.handovers);
        let mut from = CELLS[0];
        for k in 0..scenario.handovers {
            let t_us =
                ((scenario.first_handover_ms + k as f64 * scenario.handover_period_ms) * 1e3) as u64;
            let to_cell = if from == CELLS[0] { CELLS[1] } else { CELLS[0] };
            let mispredict = rng.random::<f64>() < scenario.misprediction_rate;
            let predicted_cell = if mispredict { CELLS[2] } else { to_cell };
            let gap_ms = match &scenario.gap {
                GapModel::Fixed(ms) => *ms,
                GapModel::Empirical(samples) => samples[rng.random_range(0..samples.len())],
            };
            plan.push(HandoverPlan {
                t_us,
                to_cell,
                predicted_cell,
                gap_us: (gap_ms * 1e3) as u64,
            });
            from = to_cell;
        }

        // Periodic load stops at the horizon; sync traffic runs to
        // completion regardless. The allowance covers a worst-case full
        // transfer plus protocol round trips.
        let last_ho_end = plan
            .iter()
            .map(|p| p.t_us + p.gap_us)
            .max()
            .unwrap_or(0);
        let transfer_allowance_us = (scenario.profile.total_bytes() as f64 * 8.0
            / scenario.bandwidth_bps
            * 1e6) as u64
            * 2
            + 200_000;
        let horizon_us = last_ho_end + transfer_allowance_us + (scenario.tail_ms * 1e3) as u64;

        let mut stores = BTreeMap::new();
        for host in HOSTS {
            stores.insert(host, Store::new());
        }

        let objects: Vec<ObjectState> = scenario
            .profile
            .expand()
            .iter()
            .enumerate()
            .map(|(i, spec)| ObjectState {
                key: format!("obj{i:06}").into_bytes(),
                size: spec.size_bytes,
                rate: spec.update_rate_per_s,
                counter: 0,
                alive: false,
            })
            .collect();

        Ok(Self {
            scenario: scenario.clone(),
            now_us: 0,
            store_ts: 0,
            seq: 0,
            heap: BinaryHeap::new(),
            stores,
            links: BTreeMap::new(),
            handler,
            objects,
            plan,
            current_cell: CELLS[0],
            sessions: BTreeMap::new(),
            receivers: BTreeMap::new(),
            next_session_key: 0,
            bg_key: None,
            last_bg: None,
            finished: std::collections::BTreeSet::new(),
            bg_keys_accum: 0,
            outage: None,
            horizon_us,
            rng,
            meas: Measurements::default(),
        })
    }

    /// Strictly increasing store timestamp in tick units (microseconds with
    /// a uniqueness bump).
    fn store_now(&mut self) -> u64 {
        self.store_ts = (self.store_ts + 1).max(self.now_us);
        self.store_ts
    }

    fn push(&mut self, t_us: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            t_us,
            seq: self.seq,
            ev,
        }));
    }

    fn link(&mut self, src: &'static str, dst: &'static str) -> &mut Link {
        let latency_us = (self.scenario.latency_ms * 1e3) as u64;
        let bandwidth = self.scenario.bandwidth_bps;
        self.links
            .entry((src, dst))
            .or_insert_with(|| Link::new(bandwidth, latency_us))
    }

    fn current_host(&self) -> &'static str {
        host_of(self.current_cell)
    }

    fn exp_interval_us(&mut self, rate_per_s: f64) -> u64 {
        let u: f64 = self.rng.random::<f64>().max(f64::MIN_POSITIVE);
        ((-u.ln() / rate_per_s) * 1e6).ceil() as u64
    }

    fn seed_initial_state(&mut self) {
        let host = self.current_host();
        for i in 0..self.objects.len() {
            let now = self.store_now();
            let obj = &mut self.objects[i];
            obj.counter = 1;
            obj.alive = true;
            let value = vec![1u8; obj.size];
            let key = obj.key.clone();
            self.stores
                .get_mut(host)
                .expect("host store")
                .put(USER, &key, value, now)
                .expect("initial write");
        }
    }

    fn schedule_initial_events(&mut self) {
        self.push(0, Ev::ClientTick);
        for i in 0..self.objects.len() {
            if self.objects[i].rate > 0.0 {
                let rate = self.objects[i].rate;
                let dt = self.exp_interval_us(rate);
                self.push(dt, Ev::Update { obj: i });
            }
        }
        let plan_times: Vec<u64> = self.plan.iter().map(|p| p.t_us).collect();
        for (idx, t_us) in plan_times.into_iter().enumerate() {
            if self.scenario.mode == Mode::TwoStep {
                let hint_t = t_us.saturating_sub((self.scenario.hint_horizon_ms * 1e3) as u64);
                self.push(hint_t, Ev::Hint { ho: idx });
            }
            self.push(t_us, Ev::Handover { ho: idx });
        }
    }

    fn run(mut self) -> Result<Measurements, SimError> {
        self.seed_initial_state();
        self.schedule_initial_events();
        while let Some(Reverse(event)) = self.heap.pop() {
            debug_assert!(event.t_us >= self.now_us);
            self.now_us = event.t_us;
            self.dispatch(event.ev)?;
        }
        for link in self.links.iter() {
            self.meas
                .link_bytes
                .insert(format!("{}->{}", link.0 .0, link.0 .1), link.1.bytes_carried);
        }
        assert!(
            self.meas.handovers.len() == self.scenario.handovers,
            "every scheduled handover must be measured ({}/{})",
            self.meas.handovers.len(),
            self.scenario.handovers
        );
        Ok(self.meas)
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::ClientTick => self.on_client_tick(),
            Ev::Update { obj } => self.on_update(obj),
            Ev::Hint { ho } => self.on_hint(ho)?,
            Ev::Handover { ho } => self.on_handover(ho)?,
            Ev::BlockingStart { ho } => self.on_blocking_start(ho)?,
            Ev::FrameDeliver { key, frame } => self.on_frame(key, frame),
            Ev::AckDeliver { key, frame } => self.on_ack(key, frame),
        }
        Ok(())
    }

    fn on_client_tick(&mut self) {
        let t = self.now_us;
        let rtt_ms = self.scenario.client_rtt_ms;
        match &mut self.outage {
            Some(outage) => {
                let ready = outage.ready_at_us.is_some_and(|r| t >= r);
                if ready {
                    // First answered request at the target: the outage ends.
                    let first_miss = outage.first_miss_us.unwrap_or(t);
                    let downtime_ms = (t - first_miss) as f64 / 1e3;
                    let (blocking_ms, residual, checksum_ok) =
                        outage.blocking.expect("ready implies blocking completed");
                    let m = HandoverMeasurement {
                        t_ho_ms: self.plan[outage.ho].t_us as f64 / 1e3,
                        gap_ms: outage.gap_ms,
                        blocking_ms,
                        reconnect_ms: rtt_ms,
                        downtime_ms,
                        residual_keys: residual,
                        background_keys: self.bg_keys_accum,
                        mispredicted: outage.mispredicted,
                        checksum_ok,
                    };
                    self.bg_keys_accum = 0;
                    self.meas.handovers.push(m);
                    self.meas.rtt.push((t as f64 / 1e3, rtt_ms));
                    self.outage = None;
                } else if outage.first_miss_us.is_none() {
                    outage.first_miss_us = Some(t);
                }
            }
            None => {
                self.meas.rtt.push((t as f64 / 1e3, rtt_ms));
            }
        }
        let next = t + (self.scenario.client_interval_ms * 1e3).max(1.0) as u64;
        if next <= self.horizon_us || self.outage.is_some() {
            self.push(next, Ev::ClientTick);
        }
    }

    fn on_update(&mut self, idx: usize) {
        let in_outage = self.outage.is_some();
        let host = self.current_host();
        if !in_outage {
            let now = self.store_now();
            let churn = self.scenario.churn_delete_prob > 0.0
                && self.rng.random::<f64>() < self.scenario.churn_delete_prob;
            let obj = &mut self.objects[idx];
            let key = obj.key.clone();
            let store = self.stores.get_mut(host).expect("host store");
            if churn && obj.alive {
                match store.delete(USER, &key, now) {
                    Ok(()) => obj.alive = false,
                    Err(_) => self.meas.skipped_writes += 1,
                }
            } else {
                obj.counter += 1;
                let value = vec![(obj.counter & 0xFF) as u8; obj.size];
                match store.put(USER, &key, value, now) {
                    Ok(_) => obj.alive = true,
                    Err(_) => self.meas.skipped_writes += 1,
                }
            }
            // Fresh dirt may unblock an idle background session.
            if let Some(key) = self.bg_key {
                self.poll_session(key);
            }
        } else {
            self.meas.skipped_writes += 1;
        }
        let rate = self.objects[idx].rate;
        let next = self.now_us + self.exp_interval_us(rate);
        if next <= self.horizon_us {
            self.push(next, Ev::Update { obj: idx });
        }
    }

    fn on_hint(&mut self, ho: usize) -> Result<(), SimError> {
        let plan = &self.plan[ho];
        let prediction = HandoverPrediction {
            t_ms: self.now_us / 1_000,
            handover_likely: true,
            candidates: vec![(plan.predicted_cell, 0.95)],
            targets: vec![plan.predicted_cell],
        };
        let events = self
            .handler
            .on_prediction(USER, &prediction, self.now_us / 1_000)?;
        for event in events {
            let dst = host_of(event.target_cell);
            let src = self.current_host();
            if src == dst {
                continue;
            }
            let now = self.store_now();
            let store = self.stores.get_mut(src).expect("host store");
            match SourceSession::background(store, USER, dst, now) {
                Ok(session) => {
                    let session = session.with_window(BG_WINDOW);
                    self.next_session_key += 1;
                    let key = self.next_session_key;
                    self.sessions.insert(key, SessionCtx {
                        session,
                        src,
                        dst,
                        ho: None,
                        started_us: self.now_us,
                        freeze_digest: [0; 32],
                    });
                    self.receivers.insert(key, Receiver::new());
                    self.bg_key = Some(key);
                    self.last_bg = Some((key, dst));
                    self.poll_session(key);
                }
                Err(err) => log::warn!("background sync not started: {err}"),
            }
        }
        Ok(())
    }

    fn on_handover(&mut self, ho: usize) -> Result<(), SimError> {
        let to_cell = self.plan[ho].to_cell;
        let gap_us = self.plan[ho].gap_us;
        let event = self
            .handler
            .on_handover_start(USER, to_cell, self.now_us / 1_000)?;
        let actual_host = host_of(to_cell);
        let mispredicted = self.scenario.mode == Mode::TwoStep && !event.predicted;

        // Misprediction fallback: discard state pushed to the wrong host
        // and invalidate its sync marks, so the blocking sync moves the
        // full dirty set to the correct target. This applies whether the
        // background session is still running or already drained.
        if let Some((bg, dst)) = self.last_bg.take() {
            let abort = self.sessions[&bg].session.abort_frame();
            if dst != actual_host {
                let src = self.current_host();
                self.stores
                    .get_mut(src)
                    .expect("host store")
                    .abort_migration(USER);
                let t = self.now_us;
                let arrival = self.link(src, dst).transmit(t, abort.encoded_len());
                self.push(arrival, Ev::FrameDeliver {
                    key: bg,
                    frame: abort,
                });
            }
        }

        self.outage = Some(Outage {
            ho,
            first_miss_us: None,
            ready_at_us: None,
            gap_ms: gap_us as f64 / 1e3,
            blocking: None,
            mispredicted,
        });
        self.push(self.now_us + gap_us, Ev::BlockingStart { ho });
        Ok(())
    }

    fn on_blocking_start(&mut self, ho: usize) -> Result<(), SimError> {
        let src = self.current_host();
        let dst = host_of(self.plan[ho].to_cell);
        let now = self.store_now();
        let store = self.stores.get_mut(src).expect("host store");
        let session = SourceSession::blocking(store, USER, dst, false, now)
            .map_err(SimError::Store)?
            .with_window(BLOCKING_WINDOW);
        let freeze_digest = state_digest(store, USER);
        self.next_session_key += 1;
        let key = self.next_session_key;
        self.sessions.insert(key, SessionCtx {
            session,
            src,
            dst,
            ho: Some(ho),
            started_us: self.now_us,
            freeze_digest,
        });
        self.receivers.insert(key, Receiver::new());
        self.poll_session(key);
        Ok(())
    }

    fn on_frame(&mut self, key: u64, frame: Frame) {
        let now = self.store_now();
        let Some(ctx) = self.sessions.get(&key) else {
            return;
        };
        let (src, dst) = (ctx.src, ctx.dst);
        let receiver = self.receivers.entry(key).or_default();
        let store = self.stores.get_mut(dst).expect("host store");
        if let Some(reply) = receiver.handle_frame(store, &frame, now) {
            let len = reply.encoded_len();
            let t = self.now_us;
            let arrival = self.link(dst, src).transmit(t, len);
            self.push(arrival, Ev::AckDeliver { key, frame: reply });
        }
    }

    fn on_ack(&mut self, key: u64, ack: Frame) {
        let now = self.store_now();
        let Some(ctx) = self.sessions.get_mut(&key) else {
            return;
        };
        let src = ctx.src;
        let store = self.stores.get_mut(src).expect("host store");
        ctx.session.on_ack(store, &ack, now);
        self.poll_session(key);
    }

    fn poll_session(&mut self, key: u64) {
        loop {
            let now = self.store_now();
            let Some(ctx) = self.sessions.get_mut(&key) else {
                return;
            };
            let src = ctx.src;
            let dst = ctx.dst;
            let store = self.stores.get_mut(src).expect("host store");
            match ctx.session.poll(store, now) {
                SessionStep::Send(frame) => {
                    let len = frame.encoded_len();
                    let t = self.now_us;
                    let arrival = self.link(src, dst).transmit(t, len);
                    self.push(arrival, Ev::FrameDeliver { key, frame });
                }
                SessionStep::Wait => return,
                SessionStep::Finished(report) => {
                    self.finish_session(key, &report);
                    return;
                }
            }
        }
    }

    fn finish_session(&mut self, key: u64, report: &edge_store::SyncReport) {
        // Late acks re-surface the same final report; record it once.
        if !self.finished.insert(key) {
            return;
        }
        self.meas.sync_value_bytes += report.value_bytes;
        self.meas.sync_framing_bytes += report.framing_bytes;
        match report.phase {
            SyncPhase::Background => {
                self.bg_keys_accum += report.keys_transferred;
                if self.bg_key == Some(key) {
                    self.bg_key = None;
                }
            }
            SyncPhase::Blocking => {
                let ctx = &self.sessions[&key];
                let ho = ctx.ho.expect("blocking sessions carry their handover");
                let blocking_ms = (self.now_us - ctx.started_us) as f64 / 1e3;
                let target_digest = state_digest(&self.stores[ctx.dst], USER);
                let checksum_ok = target_digest == ctx.freeze_digest;
                let to_cell = self.plan[ho].to_cell;
                self.current_cell = to_cell;
                self.bg_key = None;
                let _ = self
                    .handler
                    .on_handover_complete(USER, to_cell, self.now_us / 1_000);
                let reconnect_us = (self.scenario.client_rtt_ms * 1e3) as u64;
                if let Some(outage) = &mut self.outage {
                    outage.blocking = Some((blocking_ms, report.keys_transferred, checksum_ok));
                    outage.ready_at_us = Some(self.now_us + reconnect_us);
                }
            }
        }
    }
}

/// Runs one scenario to completion. Deterministic per seed.
pub fn run_scenario(scenario: &Scenario) -> Result<Measurements, SimError> {
    Runner::new(scenario)?.run()
}
