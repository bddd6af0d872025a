//! Source-side sync sessions.
//!
//! A [`SourceSession`] is a poll-driven state machine so the same logic runs
//! against a live byte stream (see [`crate::driver`]) or inside a
//! discrete-event simulation that models link bandwidth and latency. The
//! driver owns timing; the session owns protocol order, windowing and the
//! store's metadata transitions.
//!
//! Background sessions walk the dirty set lowest-update-rate first, blocking
//! writes to a key only while its snapshot is taken, and keep passing over
//! the namespace until nothing is dirty or a blocking sync supersedes them.
//! Blocking sessions freeze the user's writes, transfer the residual dirty
//! set plus pending tombstones, and finish on the peer's commit ack.

use std::collections::{BTreeSet, VecDeque};

use crate::error::StoreError;
use crate::store::Store;
use crate::wire::{AckStatus, Frame, SyncPhase};

/// Default number of unacknowledged frames kept in flight.
pub const DEFAULT_WINDOW: usize = 64;

/// Transfer accounting for one sync session.
///
/// `bytes_transferred = value_bytes + framing_bytes`; the split is kept so
/// framing overhead is visible in measurements. `wall_ticks` is in the
/// caller's clock unit (milliseconds in live mode, simulator ticks in
/// deterministic mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncReport {
    pub phase: SyncPhase,
    pub keys_transferred: u64,
    pub tombstones_transferred: u64,
    pub value_bytes: u64,
    pub framing_bytes: u64,
    pub bytes_transferred: u64,
    pub wall_ticks: u64,
    /// False when the session was superseded or failed before draining.
    pub completed: bool,
    pub superseded: bool,
}

/// Outcome of a blocking sync: `blocking_ticks` spans the call to the
/// completion notification, the minimum app downtime attributable to state
/// transfer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingReport {
    pub blocking_ticks: u64,
    pub residual_keys: u64,
    pub retained: bool,
    pub sync: SyncReport,
}

/// What the driver should do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionStep {
    /// Transmit this frame to the peer.
    Send(Frame),
    /// Nothing to send; acknowledgments are outstanding.
    Wait,
    /// Session is over; no further frames or acks will be produced.
    Finished(Box<SyncReport>),
}

#[derive(Debug, Clone)]
enum OutKind {
    Open,
    Object { key: Vec<u8>, sync_t: u64 },
    Tombstone { key: Vec<u8> },
    Commit,
}

#[derive(Debug, Clone)]
struct OutFrame {
    frame: Frame,
    kind: OutKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Streaming,
    Committing,
    Finished,
}

/// Poll-driven source half of a sync session.
pub struct SourceSession {
    session_id: u64,
    user_id: String,
    dest: String,
    phase: SyncPhase,
    retain: bool,
    window: usize,
    state: State,
    pending: VecDeque<OutFrame>,
    in_flight: VecDeque<OutFrame>,
    /// Keys currently pending or in flight, excluded from re-selection.
    hot_keys: BTreeSet<Vec<u8>>,
    hot_tombs: BTreeSet<Vec<u8>>,
    started_tick: u64,
    keys_transferred: u64,
    tombstones_transferred: u64,
    value_bytes: u64,
    framing_bytes: u64,
    outcome: Option<SyncReport>,
}

impl SourceSession {
    /// Starts a background session. Fails with `SyncInProgress` while a
    /// blocking sync holds the user.
    pub fn background(
        store: &mut Store,
        user_id: &str,
        dest: &str,
        now: u64,
    ) -> Result<Self, StoreError> {
        let session_id = store.begin_background(user_id, dest)?;
        Ok(Self::new(
            session_id,
            user_id,
            dest,
            SyncPhase::Background,
            false,
            now,
        ))
    }

    /// Starts a blocking session: freezes the user's writes and supersedes
    /// any in-flight background session.
    pub fn blocking(
        store: &mut Store,
        user_id: &str,
        dest: &str,
        retain: bool,
        now: u64,
    ) -> Result<Self, StoreError> {
        let session_id = store.begin_blocking(user_id, dest)?;
        Ok(Self::new(
            session_id,
            user_id,
            dest,
            SyncPhase::Blocking,
            retain,
            now,
        ))
    }

    fn new(
        session_id: u64,
        user_id: &str,
        dest: &str,
        phase: SyncPhase,
        retain: bool,
        now: u64,
    ) -> Self {
        let mut session = Self {
            session_id,
            user_id: user_id.to_string(),
            dest: dest.to_string(),
            phase,
            retain,
            window: DEFAULT_WINDOW,
            state: State::Streaming,
            pending: VecDeque::new(),
            in_flight: VecDeque::new(),
            hot_keys: BTreeSet::new(),
            hot_tombs: BTreeSet::new(),
            started_tick: now,
            keys_transferred: 0,
            tombstones_transferred: 0,
            value_bytes: 0,
            framing_bytes: 0,
            outcome: None,
        };
        session.pending.push_back(OutFrame {
            frame: Frame::OpenSession {
                session_id,
                phase,
                user_id: user_id.to_string(),
            },
            kind: OutKind::Open,
        });
        session
    }

    pub fn session_id(&self) -> u64 {
        self.session_id
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn dest(&self) -> &str {
        &self.dest
    }

    pub fn phase(&self) -> SyncPhase {
        self.phase
    }

    pub fn is_finished(&self) -> bool {
        self.state == State::Finished
    }

    /// Overrides the in-flight window (1 = stop-and-wait).
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    /// Frame to notify the peer that this session's pushed state must be
    /// discarded (misprediction fallback).
    pub fn abort_frame(&self) -> Frame {
        Frame::Abort {
            session_id: self.session_id,
        }
    }

    /// Advances the session: returns the next frame to transmit, or `Wait`
    /// while acks are outstanding, or the final report.
    pub fn poll(&mut self, store: &mut Store, now: u64) -> SessionStep {
        loop {
            if self.state == State::Finished {
                return SessionStep::Finished(Box::new(self.outcome.clone().expect("finished")));
            }
            if self.superseded(store) {
                return self.finish(store, now, false, true);
            }
            if let Some(out) = self.pending.pop_front() {
                self.framing_bytes += (out.frame.encoded_len()
                    - if let Frame::Object { value, .. } = &out.frame {
                        self.value_bytes += value.len() as u64;
                        value.len()
                    } else {
                        0
                    }) as u64;
                let frame = out.frame.clone();
                self.in_flight.push_back(out);
                return SessionStep::Send(frame);
            }
            if self.in_flight.len() + self.pending.len() < self.window && self.build_next(store, now)
            {
                continue;
            }
            match self.state {
                State::Streaming => {
                    if !self.in_flight.is_empty() {
                        return SessionStep::Wait;
                    }
                    // Nothing buildable and nothing in flight.
                    match self.phase {
                        SyncPhase::Background => {
                            // The dirty set drained; the session is done.
                            return self.finish(store, now, true, false);
                        }
                        SyncPhase::Blocking => {
                            self.state = State::Committing;
                            self.pending.push_back(OutFrame {
                                frame: Frame::Commit {
                                    session_id: self.session_id,
                                },
                                kind: OutKind::Commit,
                            });
                        }
                    }
                }
                State::Committing => return SessionStep::Wait,
                State::Finished => unreachable!(),
            }
        }
    }

    /// Builds the next object or tombstone frame, if any work remains.
    fn build_next(&mut self, store: &mut Store, now: u64) -> bool {
        if self.state != State::Streaming {
            return false;
        }
        // For blocking sessions the commit must come after everything else,
        // but selection order within the stream mirrors the background
        // order: lowest update rate first.
        if let Some((key, version, value)) = store.next_dirty_excluding(&self.user_id, &self.hot_keys)
        {
            // T is recorded before the snapshot so a concurrent update keeps
            // the key dirty after this sync completes.
            let sync_t = now;
            self.hot_keys.insert(key.clone());
            self.pending.push_back(OutFrame {
                frame: Frame::Object {
                    user_id: self.user_id.clone(),
                    key: key.clone(),
                    version,
                    value,
                },
                kind: OutKind::Object { key, sync_t },
            });
            return true;
        }
        if let Some((key, deleted_at_ms)) = store.next_unsynced_tombstone(&self.user_id, &self.hot_tombs)
        {
            self.hot_tombs.insert(key.clone());
            self.pending.push_back(OutFrame {
                frame: Frame::Tombstone {
                    user_id: self.user_id.clone(),
                    key: key.clone(),
                    deleted_at_ms,
                },
                kind: OutKind::Tombstone { key },
            });
            return true;
        }
        false
    }

    /// Feeds a peer acknowledgment into the session. Poll again afterwards.
    pub fn on_ack(&mut self, store: &mut Store, ack: &Frame, now: u64) {
        let Frame::Ack { status, .. } = ack else {
            return;
        };
        if self.state == State::Finished {
            return;
        }
        if self.superseded(store) {
            self.finish(store, now, false, true);
            return;
        }
        match status {
            AckStatus::Retry => {
                // Retransmit the oldest unacknowledged frame.
                if let Some(front) = self.in_flight.pop_front() {
                    self.pending.push_front(front);
                }
            }
            AckStatus::Ok => {
                let Some(acked) = self.in_flight.pop_front() else {
                    return;
                };
                match acked.kind {
                    OutKind::Open => {}
                    OutKind::Object { key, sync_t } => {
                        store.mark_synced(&self.user_id, &key, sync_t);
                        // A blocking session transfers each residual key
                        // exactly once: writes are frozen, so the key stays
                        // excluded. Background sessions re-admit the key so
                        // a concurrent update gets re-synced on a later pass.
                        if self.phase == SyncPhase::Background {
                            self.hot_keys.remove(&key);
                        }
                        self.keys_transferred += 1;
                    }
                    OutKind::Tombstone { key } => {
                        store.mark_tombstone_synced(&self.user_id, &key);
                        if self.phase == SyncPhase::Background {
                            self.hot_tombs.remove(&key);
                        }
                        self.tombstones_transferred += 1;
                    }
                    OutKind::Commit => {
                        store.commit_blocking(&self.user_id, self.retain);
                        self.finish_committed(now);
                    }
                }
            }
        }
    }

    /// Marks the session failed after a transport error. Background: meta is
    /// already correct (only acked keys were marked). Blocking: the user is
    /// unfrozen with state intact.
    pub fn fail(&mut self, store: &mut Store, now: u64) -> SyncReport {
        if self.state == State::Finished {
            return self.outcome.clone().expect("finished");
        }
        match self.phase {
            SyncPhase::Background => {
                store.end_session(&self.user_id, self.session_id);
            }
            SyncPhase::Blocking => {
                store.release_blocking(&self.user_id, self.session_id);
            }
        }
        if let SessionStep::Finished(report) = self.finish_only(now, false, false) {
            *report
        } else {
            unreachable!()
        }
    }

    fn superseded(&self, store: &Store) -> bool {
        self.phase == SyncPhase::Background
            && !store.session_is_active(&self.user_id, self.session_id)
    }

    fn finish(&mut self, store: &mut Store, now: u64, completed: bool, superseded: bool) -> SessionStep {
        if completed {
            store.end_session(&self.user_id, self.session_id);
        }
        self.finish_only(now, completed, superseded)
    }

    fn finish_committed(&mut self, now: u64) {
        self.finish_only(now, true, false);
    }

    fn finish_only(&mut self, now: u64, completed: bool, superseded: bool) -> SessionStep {
        self.state = State::Finished;
        let report = SyncReport {
            phase: self.phase,
            keys_transferred: self.keys_transferred,
            tombstones_transferred: self.tombstones_transferred,
            value_bytes: self.value_bytes,
            framing_bytes: self.framing_bytes,
            bytes_transferred: self.value_bytes + self.framing_bytes,
            wall_ticks: now.saturating_sub(self.started_tick),
            completed,
            superseded,
        };
        self.outcome = Some(report.clone());
        SessionStep::Finished(Box::new(report))
    }

    /// Assembles the blocking report once a blocking session has finished.
    pub fn blocking_report(&self) -> Option<BlockingReport> {
        let report = self.outcome.clone()?;
        if self.phase != SyncPhase::Blocking {
            return None;
        }
        Some(BlockingReport {
            blocking_ticks: report.wall_ticks,
            residual_keys: report.keys_transferred,
            retained: self.retain,
            sync: report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receiver::Receiver;

    /// Drives a session against an in-process peer with zero latency,
    /// delivering each frame and its ack immediately.
    fn pump(
        source: &mut Store,
        target: &mut Store,
        session: &mut SourceSession,
        now: u64,
    ) -> SyncReport {
        let mut receiver = Receiver::new();
        loop {
            match session.poll(source, now) {
                SessionStep::Send(frame) => {
                    if let Some(reply) = receiver.handle_frame(target, &frame, now) {
                        session.on_ack(source, &reply, now);
                    }
                }
                SessionStep::Wait => panic!("no acks outstanding in lockstep pump"),
                SessionStep::Finished(report) => return *report,
            }
        }
    }

    #[test]
    fn background_transfers_all_dirty_keys() {
        let mut source = Store::new();
        let mut target = Store::new();
        for i in 0..10u8 {
            source.put("u", &[b'k', i], vec![i; 100], 10).unwrap();
        }
        let mut session = SourceSession::background(&mut source, "u", "t", 20).unwrap();
        let report = pump(&mut source, &mut target, &mut session, 20);
        assert!(report.completed);
        assert_eq!(report.keys_transferred, 10);
        assert!(source.dirty_keys("u").is_empty());
        assert_eq!(target.key_count("u"), 10);
        assert_eq!(report.value_bytes, 1000);
        assert!(report.framing_bytes > 0);
        assert_eq!(
            report.bytes_transferred,
            report.value_bytes + report.framing_bytes
        );
    }

    #[test]
    fn blocking_on_clean_store_commits_immediately() {
        let mut source = Store::new();
        let mut target = Store::new();
        source.put("u", b"k", b"v".to_vec(), 0).unwrap();
        let mut bg = SourceSession::background(&mut source, "u", "t", 1).unwrap();
        pump(&mut source, &mut target, &mut bg, 1);
        let mut bl = SourceSession::blocking(&mut source, "u", "t", true, 2).unwrap();
        let report = pump(&mut source, &mut target, &mut bl, 2);
        assert!(report.completed);
        assert_eq!(report.keys_transferred, 0);
        let blocking = bl.blocking_report().unwrap();
        assert_eq!(blocking.residual_keys, 0);
        assert!(blocking.retained);
        // retain=true keeps local state readable.
        assert_eq!(source.get("u", b"k").unwrap(), b"v");
    }

    #[test]
    fn blocking_without_retain_drops_source_state() {
        let mut source = Store::new();
        let mut target = Store::new();
        source.put("u", b"k", b"v".to_vec(), 0).unwrap();
        let mut bl = SourceSession::blocking(&mut source, "u", "t", false, 1).unwrap();
        let report = pump(&mut source, &mut target, &mut bl, 1);
        assert!(report.completed);
        assert_eq!(report.keys_transferred, 1);
        assert!(source.get("u", b"k").is_err());
        assert_eq!(target.get("u", b"k").unwrap(), b"v");
    }

    #[test]
    fn deletion_propagates_through_blocking_sync() {
        let mut source = Store::new();
        let mut target = Store::new();
        source.put("u", b"doomed", b"v".to_vec(), 0).unwrap();
        source.put("u", b"kept", b"v".to_vec(), 0).unwrap();
        let mut bg = SourceSession::background(&mut source, "u", "t", 1).unwrap();
        pump(&mut source, &mut target, &mut bg, 1);
        assert_eq!(target.key_count("u"), 2);
        source.delete("u", b"doomed", 2).unwrap();
        let mut bl = SourceSession::blocking(&mut source, "u", "t", false, 3).unwrap();
        pump(&mut source, &mut target, &mut bl, 3);
        assert!(target.get("u", b"doomed").is_err());
        assert_eq!(target.get("u", b"kept").unwrap(), b"v");
    }

    #[test]
    fn all_keys_dirty_means_residual_equals_key_count() {
        let mut source = Store::new();
        let mut target = Store::new();
        for i in 0..7u8 {
            source.put("u", &[b'k', i], vec![i], 0).unwrap();
        }
        let mut bl = SourceSession::blocking(&mut source, "u", "t", true, 1).unwrap();
        pump(&mut source, &mut target, &mut bl, 1);
        let blocking = bl.blocking_report().unwrap();
        assert_eq!(blocking.residual_keys, 7);
    }

    #[test]
    fn background_superseded_by_blocking() {
        let mut source = Store::new();
        let mut target = Store::new();
        for i in 0..5u8 {
            source.put("u", &[b'k', i], vec![0; 10], 0).unwrap();
        }
        let mut bg = SourceSession::background(&mut source, "u", "t", 1).unwrap();
        // Deliver only the open + first object, then a blocking sync starts.
        let mut receiver = Receiver::new();
        for _ in 0..2 {
            if let SessionStep::Send(frame) = bg.poll(&mut source, 1) {
                if let Some(reply) = receiver.handle_frame(&mut target, &frame, 1) {
                    bg.on_ack(&mut source, &reply, 1);
                }
            }
        }
        let mut bl = SourceSession::blocking(&mut source, "u", "t", false, 2).unwrap();
        match bg.poll(&mut source, 2) {
            SessionStep::Finished(report) => {
                assert!(report.superseded);
                assert!(!report.completed);
            }
            other => panic!("expected supersede, got {other:?}"),
        }
        let report = pump(&mut source, &mut target, &mut bl, 2);
        assert!(report.completed);
        assert_eq!(target.key_count("u"), 5);
    }

    #[test]
    fn update_during_inflight_sync_keeps_key_dirty() {
        let mut source = Store::new();
        let mut target = Store::new();
        source.put("u", b"k", b"v1".to_vec(), 3).unwrap();
        let mut session = SourceSession::background(&mut source, "u", "t", 4).unwrap();
        let mut receiver = Receiver::new();
        // open frame
        let SessionStep::Send(open) = session.poll(&mut source, 4) else {
            panic!()
        };
        let open_ack = receiver.handle_frame(&mut target, &open, 4).unwrap();
        session.on_ack(&mut source, &open_ack, 4);
        // object frame snapshotted at T=4
        let SessionStep::Send(obj) = session.poll(&mut source, 4) else {
            panic!()
        };
        // concurrent write at t=5 while the frame is in flight
        source.put("u", b"k", b"v2".to_vec(), 5).unwrap();
        let ack = receiver.handle_frame(&mut target, &obj, 5).unwrap();
        session.on_ack(&mut source, &ack, 5);
        let obj = source.get_object("u", b"k").unwrap();
        assert_eq!(obj.meta.last_sync_ms, Some(4));
        assert_eq!(obj.meta.last_update_ms, 5);
        // Key remains dirty and is re-synced on the next pass.
        assert_eq!(source.dirty_keys("u"), vec![b"k".to_vec()]);
        let report = pump(&mut source, &mut target, &mut session, 6);
        assert!(report.completed);
        assert_eq!(report.keys_transferred, 2);
        assert_eq!(target.get("u", b"k").unwrap(), b"v2");
    }
}
