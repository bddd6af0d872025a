//! In-memory per-user key-value store with sync metadata.
//!
//! The store is a plain data structure: timestamps are injected by the
//! caller and all sync progress is driven externally through
//! [`crate::session::SourceSession`] and [`crate::receiver::Receiver`].
//! Wrap it in a mutex to share between client sessions and a sync driver;
//! critical sections are one key-serialization long at most.

use std::collections::BTreeMap;

use crate::error::StoreError;
use crate::meta::KeyMeta;

/// A stored object together with its per-key metadata, as returned to
/// inspection APIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredObject {
    pub user_id: String,
    pub key: Vec<u8>,
    pub value: Vec<u8>,
    pub version: u64,
    pub meta: KeyMeta,
}

#[derive(Debug, Clone)]
struct ObjectEntry {
    value: Vec<u8>,
    version: u64,
    meta: KeyMeta,
}

#[derive(Debug, Clone)]
struct TombstoneEntry {
    deleted_at_ms: u64,
    /// Version of the object when it was deleted; a re-created key continues
    /// the counter so remote replicas never confuse generations.
    last_version: u64,
    /// Set when the deletion was propagated in the current sync epoch.
    synced_in_epoch: bool,
}

/// Which sync phase an active session is running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivePhase {
    Background,
    Blocking,
}

#[derive(Debug, Clone)]
struct ActiveSync {
    session_id: u64,
    phase: ActivePhase,
}

/// Book-keeping for one migration attempt toward a destination.
///
/// All `last_sync_time` updates are journaled so that a migration toward the
/// wrong host can be rolled back, leaving the full dirty set intact for the
/// corrective blocking sync.
#[derive(Debug, Default, Clone)]
struct SyncEpoch {
    dest: String,
    /// key -> last_sync_ms value before the first update in this epoch.
    sync_rollback: BTreeMap<Vec<u8>, Option<u64>>,
    /// tombstone keys marked synced during this epoch.
    tombstone_rollback: Vec<Vec<u8>>,
}

#[derive(Debug, Default)]
struct UserState {
    objects: BTreeMap<Vec<u8>, ObjectEntry>,
    tombstones: BTreeMap<Vec<u8>, TombstoneEntry>,
    frozen: bool,
    epoch: Option<SyncEpoch>,
    active: Option<ActiveSync>,
}

/// The modified data store: per-user namespaces of binary objects with
/// update tracking and two-step synchronization hooks.
#[derive(Debug, Default)]
pub struct Store {
    users: BTreeMap<String, UserState>,
    next_session_id: u64,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    fn user(&self, user_id: &str) -> Option<&UserState> {
        self.users.get(user_id)
    }

    fn user_mut(&mut self, user_id: &str) -> &mut UserState {
        self.users.entry(user_id.to_string()).or_default()
    }

    /// Stores `value` under `(user_id, key)`, creating the user namespace on
    /// first use. Returns the new object version.
    pub fn put(
        &mut self,
        user_id: &str,
        key: &[u8],
        value: Vec<u8>,
        now_ms: u64,
    ) -> Result<u64, StoreError> {
        assert!(!key.is_empty(), "keys must be non-empty");
        let user = self.user_mut(user_id);
        if user.frozen {
            return Err(StoreError::Frozen);
        }
        if let Some(entry) = user.objects.get_mut(key) {
            entry.value = value;
            entry.version += 1;
            entry.meta.record_update(now_ms);
            return Ok(entry.version);
        }
        // A key re-created after deletion continues its version counter.
        let version = match user.tombstones.remove(key) {
            Some(tomb) => tomb.last_version + 1,
            None => 1,
        };
        user.objects.insert(
            key.to_vec(),
            ObjectEntry {
                value,
                version,
                meta: KeyMeta::new(now_ms),
            },
        );
        Ok(version)
    }

    pub fn get(&self, user_id: &str, key: &[u8]) -> Result<&[u8], StoreError> {
        self.user(user_id)
            .and_then(|u| u.objects.get(key))
            .map(|e| e.value.as_slice())
            .ok_or(StoreError::NotFound)
    }

    pub fn get_object(&self, user_id: &str, key: &[u8]) -> Result<StoredObject, StoreError> {
        self.user(user_id)
            .and_then(|u| u.objects.get(key))
            .map(|e| StoredObject {
                user_id: user_id.to_string(),
                key: key.to_vec(),
                value: e.value.clone(),
                version: e.version,
                meta: e.meta.clone(),
            })
            .ok_or(StoreError::NotFound)
    }

    /// Removes a key and records a tombstone so in-flight or future syncs
    /// propagate the deletion.
    pub fn delete(&mut self, user_id: &str, key: &[u8], now_ms: u64) -> Result<(), StoreError> {
        let user = self.users.get_mut(user_id).ok_or(StoreError::NotFound)?;
        if user.frozen {
            return Err(StoreError::Frozen);
        }
        let entry = user.objects.remove(key).ok_or(StoreError::NotFound)?;
        user.tombstones.insert(
            key.to_vec(),
            TombstoneEntry {
                deleted_at_ms: now_ms,
                last_version: entry.version,
                synced_in_epoch: false,
            },
        );
        Ok(())
    }

    /// Average update rate for a key in updates per second.
    pub fn update_rate(&self, user_id: &str, key: &[u8]) -> Result<f64, StoreError> {
        self.user(user_id)
            .and_then(|u| u.objects.get(key))
            .map(|e| e.meta.update_rate())
            .ok_or(StoreError::NotFound)
    }

    /// Keys updated after their last sync, ordered ascending by update rate
    /// with lexicographic tie-breaking. Unknown users yield an empty list.
    pub fn dirty_keys(&self, user_id: &str) -> Vec<Vec<u8>> {
        let Some(user) = self.user(user_id) else {
            return Vec::new();
        };
        let mut dirty: Vec<(&Vec<u8>, f64)> = user
            .objects
            .iter()
            .filter(|(_, e)| e.meta.is_dirty())
            .map(|(k, e)| (k, e.meta.update_rate()))
            .collect();
        dirty.sort_by(|(ka, ra), (kb, rb)| {
            ra.partial_cmp(rb)
                .expect("update rates are finite")
                .then_with(|| ka.cmp(kb))
        });
        dirty.into_iter().map(|(k, _)| k.clone()).collect()
    }

    pub fn key_count(&self, user_id: &str) -> usize {
        self.user(user_id).map_or(0, |u| u.objects.len())
    }

    pub fn user_exists(&self, user_id: &str) -> bool {
        self.users.contains_key(user_id)
    }

    pub fn is_frozen(&self, user_id: &str) -> bool {
        self.user(user_id).is_some_and(|u| u.frozen)
    }

    /// Full state snapshot `(key, version, value)` in key order, for
    /// checksumming and migration verification.
    pub fn state_snapshot(&self, user_id: &str) -> Vec<(Vec<u8>, u64, Vec<u8>)> {
        self.user(user_id)
            .map(|u| {
                u.objects
                    .iter()
                    .map(|(k, e)| (k.clone(), e.version, e.value.clone()))
                    .collect()
            })
            .unwrap_or_default()
    }

    // ---- target-side ingestion ----------------------------------------

    /// Applies a replicated object or tombstone received from a peer.
    ///
    /// Idempotent per `(key, source_version)`: re-applying the same version
    /// leaves a single copy. New keys get fresh metadata with the receipt
    /// time as their first update time.
    pub fn apply_remote(
        &mut self,
        user_id: &str,
        key: &[u8],
        value: Option<Vec<u8>>,
        source_version: u64,
        now_ms: u64,
    ) {
        let user = self.user_mut(user_id);
        match value {
            None => {
                // Tombstone: removing an absent key is a no-op.
                user.objects.remove(key);
            }
            Some(value) => match user.objects.get_mut(key) {
                Some(entry) if entry.version == source_version => {}
                Some(entry) => {
                    entry.value = value;
                    entry.version = source_version;
                    entry.meta.record_update(now_ms);
                }
                None => {
                    user.objects.insert(
                        key.to_vec(),
                        ObjectEntry {
                            value,
                            version: source_version,
                            meta: KeyMeta::new(now_ms),
                        },
                    );
                }
            },
        }
    }

    /// Removes a key only if it still holds the given version. Used when a
    /// peer aborts a session to discard state it had pushed to this store.
    pub fn retract(&mut self, user_id: &str, key: &[u8], version: u64) {
        if let Some(user) = self.users.get_mut(user_id) {
            if user.objects.get(key).is_some_and(|e| e.version == version) {
                user.objects.remove(key);
            }
        }
    }

    // ---- source-side sync hooks ----------------------------------------

    pub(crate) fn alloc_session_id(&mut self) -> u64 {
        self.next_session_id += 1;
        self.next_session_id
    }

    /// Opens (or continues) the sync epoch toward `dest`. A pre-existing
    /// epoch toward a different destination is rolled back first: its sync
    /// marks are invalid for the new target.
    fn begin_epoch(&mut self, user_id: &str, dest: &str) {
        let needs_rollback = self
            .user(user_id)
            .and_then(|u| u.epoch.as_ref())
            .is_some_and(|e| e.dest != dest);
        if needs_rollback {
            self.rollback_epoch(user_id);
        }
        let user = self.user_mut(user_id);
        if user.epoch.is_none() {
            user.epoch = Some(SyncEpoch {
                dest: dest.to_string(),
                ..Default::default()
            });
        }
    }

    /// Invalidates every `last_sync_time` update recorded in the current
    /// epoch and re-marks its tombstones unsynced.
    pub fn rollback_epoch(&mut self, user_id: &str) {
        let Some(user) = self.users.get_mut(user_id) else {
            return;
        };
        let Some(epoch) = user.epoch.take() else {
            return;
        };
        for (key, prior) in epoch.sync_rollback {
            if let Some(entry) = user.objects.get_mut(&key) {
                entry.meta.last_sync_ms = prior;
            }
        }
        for key in epoch.tombstone_rollback {
            if let Some(tomb) = user.tombstones.get_mut(&key) {
                tomb.synced_in_epoch = false;
            }
        }
    }

    pub(crate) fn begin_background(
        &mut self,
        user_id: &str,
        dest: &str,
    ) -> Result<u64, StoreError> {
        if self
            .user(user_id)
            .and_then(|u| u.active.as_ref())
            .is_some_and(|a| a.phase == ActivePhase::Blocking)
        {
            return Err(StoreError::SyncInProgress);
        }
        self.begin_epoch(user_id, dest);
        let session_id = self.alloc_session_id();
        self.user_mut(user_id).active = Some(ActiveSync {
            session_id,
            phase: ActivePhase::Background,
        });
        Ok(session_id)
    }

    pub(crate) fn begin_blocking(&mut self, user_id: &str, dest: &str) -> Result<u64, StoreError> {
        if self
            .user(user_id)
            .and_then(|u| u.active.as_ref())
            .is_some_and(|a| a.phase == ActivePhase::Blocking)
        {
            return Err(StoreError::SyncInProgress);
        }
        self.begin_epoch(user_id, dest);
        let session_id = self.alloc_session_id();
        let user = self.user_mut(user_id);
        // Supersedes any in-flight background session and freezes writes.
        user.active = Some(ActiveSync {
            session_id,
            phase: ActivePhase::Blocking,
        });
        user.frozen = true;
        Ok(session_id)
    }

    /// True while `session_id` is still the user's active sync session.
    pub fn session_is_active(&self, user_id: &str, session_id: u64) -> bool {
        self.user(user_id)
            .and_then(|u| u.active.as_ref())
            .is_some_and(|a| a.session_id == session_id)
    }

    pub(crate) fn end_session(&mut self, user_id: &str, session_id: u64) {
        if let Some(user) = self.users.get_mut(user_id) {
            if user.active.as_ref().is_some_and(|a| a.session_id == session_id) {
                user.active = None;
            }
        }
    }

    /// Next dirty key to transfer, skipping those already in flight.
    /// Returns the snapshot `(key, version, value)`.
    pub(crate) fn next_dirty_excluding(
        &self,
        user_id: &str,
        exclude: &std::collections::BTreeSet<Vec<u8>>,
    ) -> Option<(Vec<u8>, u64, Vec<u8>)> {
        let user = self.user(user_id)?;
        self.dirty_keys(user_id)
            .into_iter()
            .find(|k| !exclude.contains(k))
            .map(|k| {
                let e = &user.objects[&k];
                (k, e.version, e.value.clone())
            })
    }

    /// Next tombstone not yet propagated in this epoch.
    pub(crate) fn next_unsynced_tombstone(
        &self,
        user_id: &str,
        exclude: &std::collections::BTreeSet<Vec<u8>>,
    ) -> Option<(Vec<u8>, u64)> {
        let user = self.user(user_id)?;
        user.tombstones
            .iter()
            .find(|(k, t)| !t.synced_in_epoch && !exclude.contains(*k))
            .map(|(k, t)| (k.clone(), t.deleted_at_ms))
    }

    /// Records a completed key sync: `sync_t` is the time captured *before*
    /// the snapshot was taken, so updates racing the transfer keep the key
    /// dirty. The prior value is journaled in the epoch for rollback.
    pub fn mark_synced(&mut self, user_id: &str, key: &[u8], sync_t_ms: u64) {
        let Some(user) = self.users.get_mut(user_id) else {
            return;
        };
        let Some(entry) = user.objects.get_mut(key) else {
            return; // deleted while in flight; the tombstone will propagate
        };
        if let Some(epoch) = user.epoch.as_mut() {
            epoch
                .sync_rollback
                .entry(key.to_vec())
                .or_insert(entry.meta.last_sync_ms);
        }
        entry.meta.last_sync_ms = Some(sync_t_ms);
    }

    pub(crate) fn mark_tombstone_synced(&mut self, user_id: &str, key: &[u8]) {
        let Some(user) = self.users.get_mut(user_id) else {
            return;
        };
        if let Some(tomb) = user.tombstones.get_mut(key) {
            if !tomb.synced_in_epoch {
                tomb.synced_in_epoch = true;
                if let Some(epoch) = user.epoch.as_mut() {
                    epoch.tombstone_rollback.push(key.to_vec());
                }
            }
        }
    }

    /// Finalizes a committed blocking sync: the epoch journal is dropped,
    /// propagated tombstones are discarded, writes are unfrozen and, unless
    /// `retain` is set, the whole user namespace is deleted locally.
    pub(crate) fn commit_blocking(&mut self, user_id: &str, retain: bool) {
        if !retain {
            self.users.remove(user_id);
            return;
        }
        if let Some(user) = self.users.get_mut(user_id) {
            user.frozen = false;
            user.epoch = None;
            user.tombstones.clear();
            user.active = None;
        }
    }

    /// Releases the freeze after a failed blocking sync; state and epoch
    /// journal stay intact.
    pub(crate) fn release_blocking(&mut self, user_id: &str, session_id: u64) {
        if let Some(user) = self.users.get_mut(user_id) {
            user.frozen = false;
            if user.active.as_ref().is_some_and(|a| a.session_id == session_id) {
                user.active = None;
            }
        }
    }

    /// Aborts the user's migration entirely: ends any active session and
    /// rolls back the epoch so the next sync re-transfers the full dirty
    /// set. Used on misprediction fallback.
    pub fn abort_migration(&mut self, user_id: &str) {
        if let Some(user) = self.users.get_mut(user_id) {
            user.active = None;
            user.frozen = false;
        }
        self.rollback_epoch(user_id);
    }

    /// Destination of the migration epoch currently in progress, if any.
    pub fn epoch_dest(&self, user_id: &str) -> Option<&str> {
        self.user(user_id)
            .and_then(|u| u.epoch.as_ref())
            .map(|e| e.dest.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_initializes_meta_on_creation() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 1000).unwrap();
        let obj = store.get_object("u", b"k").unwrap();
        assert_eq!(obj.meta.first_update_ms, 1000);
        assert_eq!(obj.meta.last_update_ms, 1000);
        assert_eq!(obj.meta.updates_count, 1);
        assert_eq!(obj.meta.last_sync_ms, None);
        assert_eq!(obj.version, 1);
    }

    #[test]
    fn second_put_updates_meta() {
        let mut store = Store::new();
        store.put("u", b"k", b"v1".to_vec(), 1000).unwrap();
        let v = store.put("u", b"k", b"v2".to_vec(), 2000).unwrap();
        let obj = store.get_object("u", b"k").unwrap();
        assert_eq!(v, 2);
        assert_eq!(obj.meta.first_update_ms, 1000);
        assert_eq!(obj.meta.last_update_ms, 2000);
        assert_eq!(obj.meta.updates_count, 2);
    }

    #[test]
    fn get_after_put_and_missing_key() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 0).unwrap();
        assert_eq!(store.get("u", b"k").unwrap(), b"v");
        assert_eq!(store.get("u", b"absent"), Err(StoreError::NotFound));
        assert_eq!(store.get("ghost", b"k"), Err(StoreError::NotFound));
    }

    #[test]
    fn delete_then_get_is_not_found() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 0).unwrap();
        store.delete("u", b"k", 5).unwrap();
        assert_eq!(store.get("u", b"k"), Err(StoreError::NotFound));
        assert_eq!(store.delete("u", b"k", 6), Err(StoreError::NotFound));
    }

    #[test]
    fn recreated_key_continues_version_counter() {
        let mut store = Store::new();
        store.put("u", b"k", b"a".to_vec(), 0).unwrap();
        store.put("u", b"k", b"b".to_vec(), 1).unwrap();
        store.delete("u", b"k", 2).unwrap();
        let v = store.put("u", b"k", b"c".to_vec(), 3).unwrap();
        assert_eq!(v, 3);
    }

    #[test]
    fn dirty_keys_sorted_by_rate_then_lex() {
        let mut store = Store::new();
        // A: one write, rate 0.
        store.put("u", b"A", b"v".to_vec(), 0).unwrap();
        // B: 51 writes over 1 s -> 50/s.
        for i in 0..51 {
            store.put("u", b"B", b"v".to_vec(), i * 20).unwrap();
        }
        // C: 6 writes over 1 s -> 5/s.
        for i in 0..6 {
            store.put("u", b"C", b"v".to_vec(), i * 200).unwrap();
        }
        assert_eq!(
            store.dirty_keys("u"),
            vec![b"A".to_vec(), b"C".to_vec(), b"B".to_vec()]
        );
    }

    #[test]
    fn equal_rates_tie_break_lexicographically() {
        let mut store = Store::new();
        store.put("u", b"b", b"v".to_vec(), 0).unwrap();
        store.put("u", b"a", b"v".to_vec(), 0).unwrap();
        assert_eq!(store.dirty_keys("u"), vec![b"a".to_vec(), b"b".to_vec()]);
    }

    #[test]
    fn synced_keys_leave_dirty_set() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 100).unwrap();
        store.mark_synced("u", b"k", 100);
        assert!(store.dirty_keys("u").is_empty());
        store.put("u", b"k", b"v2".to_vec(), 200).unwrap();
        assert_eq!(store.dirty_keys("u"), vec![b"k".to_vec()]);
    }

    #[test]
    fn frozen_user_rejects_writes() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 0).unwrap();
        store.begin_blocking("u", "hostB").unwrap();
        assert_eq!(
            store.put("u", b"k", b"x".to_vec(), 1),
            Err(StoreError::Frozen)
        );
        assert_eq!(store.delete("u", b"k", 1), Err(StoreError::Frozen));
        // Reads stay available.
        assert_eq!(store.get("u", b"k").unwrap(), b"v");
    }

    #[test]
    fn apply_remote_is_idempotent() {
        let mut store = Store::new();
        store.apply_remote("u", b"k", Some(b"v".to_vec()), 3, 10);
        store.apply_remote("u", b"k", Some(b"v".to_vec()), 3, 11);
        let obj = store.get_object("u", b"k").unwrap();
        assert_eq!(obj.version, 3);
        assert_eq!(obj.meta.first_update_ms, 10);
        assert_eq!(obj.meta.updates_count, 1);
    }

    #[test]
    fn apply_remote_tombstone_absent_key_is_noop() {
        let mut store = Store::new();
        store.apply_remote("u", b"k", None, 1, 10);
        assert_eq!(store.get("u", b"k"), Err(StoreError::NotFound));
    }

    #[test]
    fn epoch_rollback_restores_sync_marks() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 100).unwrap();
        store.begin_background("u", "wrong-host").unwrap();
        store.mark_synced("u", b"k", 150);
        assert!(store.dirty_keys("u").is_empty());
        store.abort_migration("u");
        assert_eq!(store.dirty_keys("u"), vec![b"k".to_vec()]);
    }

    #[test]
    fn epoch_to_new_dest_rolls_back_previous() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 100).unwrap();
        let s1 = store.begin_background("u", "hostC").unwrap();
        store.mark_synced("u", b"k", 150);
        store.end_session("u", s1);
        // Blocking sync toward a different host invalidates hostC's marks.
        store.begin_blocking("u", "hostB").unwrap();
        assert_eq!(store.dirty_keys("u"), vec![b"k".to_vec()]);
    }

    #[test]
    fn commit_without_retain_drops_user_state() {
        let mut store = Store::new();
        store.put("u", b"k", b"v".to_vec(), 0).unwrap();
        store.begin_blocking("u", "hostB").unwrap();
        store.commit_blocking("u", false);
        assert_eq!(store.get("u", b"k"), Err(StoreError::NotFound));
        assert!(!store.user_exists("u"));
    }
}
