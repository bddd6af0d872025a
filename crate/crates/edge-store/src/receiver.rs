//! Target-side ingestion of sync sessions.
//!
//! One receiver handles one connection's session at a time. Objects restore
//! non-blockingly into the local store as frames arrive; an abort discards
//! everything the session pushed, so state never leaks onto a mispredicted
//! host.

use crate::store::Store;
use crate::wire::{AckStatus, Frame, SyncPhase};

#[derive(Debug, Default)]
pub struct Receiver {
    session_id: u64,
    phase: Option<SyncPhase>,
    /// Frames applied in the current session.
    applied: u64,
    /// `(user, key, version)` applied by this session, for abort retraction.
    session_writes: Vec<(String, Vec<u8>, u64)>,
}

impl Receiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ack used to ask for a retransmit after a payload checksum mismatch.
    pub fn retry_ack(&self) -> Frame {
        Frame::Ack {
            session_id: self.session_id,
            status: AckStatus::Retry,
            applied: self.applied,
        }
    }

    fn ok_ack(&self) -> Frame {
        Frame::Ack {
            session_id: self.session_id,
            status: AckStatus::Ok,
            applied: self.applied,
        }
    }

    /// Applies one frame against the target store, returning the reply to
    /// send back, if any.
    pub fn handle_frame(&mut self, store: &mut Store, frame: &Frame, now: u64) -> Option<Frame> {
        match frame {
            Frame::OpenSession {
                session_id, phase, ..
            } => {
                self.session_id = *session_id;
                self.phase = Some(*phase);
                self.applied = 0;
                self.session_writes.clear();
                Some(self.ok_ack())
            }
            Frame::Object {
                user_id,
                key,
                version,
                value,
            } => {
                store.apply_remote(user_id, key, Some(value.clone()), *version, now);
                self.session_writes
                    .push((user_id.clone(), key.clone(), *version));
                self.applied += 1;
                Some(self.ok_ack())
            }
            Frame::Tombstone { user_id, key, .. } => {
                store.apply_remote(user_id, key, None, 0, now);
                self.applied += 1;
                Some(self.ok_ack())
            }
            Frame::Commit { .. } => {
                // The byte stream is ordered, so every frame of the session
                // has been applied: the target now holds the full state.
                self.applied += 1;
                Some(self.ok_ack())
            }
            Frame::Abort { .. } => {
                for (user, key, version) in self.session_writes.drain(..) {
                    store.retract(&user, &key, version);
                }
                None
            }
            Frame::Ack { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abort_discards_session_writes() {
        let mut store = Store::new();
        let mut rx = Receiver::new();
        let open = Frame::OpenSession {
            session_id: 1,
            phase: SyncPhase::Background,
            user_id: "u".into(),
        };
        rx.handle_frame(&mut store, &open, 0);
        let obj = Frame::Object {
            user_id: "u".into(),
            key: b"k".to_vec(),
            version: 2,
            value: b"v".to_vec(),
        };
        rx.handle_frame(&mut store, &obj, 1);
        assert_eq!(store.get("u", b"k").unwrap(), b"v");
        rx.handle_frame(&mut store, &Frame::Abort { session_id: 1 }, 2);
        assert!(store.get("u", b"k").is_err());
    }

    #[test]
    fn abort_keeps_keys_overwritten_since() {
        let mut store = Store::new();
        let mut rx = Receiver::new();
        rx.handle_frame(
            &mut store,
            &Frame::OpenSession {
                session_id: 1,
                phase: SyncPhase::Background,
                user_id: "u".into(),
            },
            0,
        );
        rx.handle_frame(
            &mut store,
            &Frame::Object {
                user_id: "u".into(),
                key: b"k".to_vec(),
                version: 2,
                value: b"old".to_vec(),
            },
            1,
        );
        // A newer version landed through another session before the abort.
        store.apply_remote("u", b"k", Some(b"new".to_vec()), 3, 2);
        rx.handle_frame(&mut store, &Frame::Abort { session_id: 1 }, 3);
        assert_eq!(store.get("u", b"k").unwrap(), b"new");
    }
}
