//! Per-key sync-tracking metadata.
//!
//! Every key carries its creation time, last update time, update count and
//! the time it was last synced to a peer instance. The update rate derived
//! from these fields drives the ordering of background synchronization.

/// Sync-tracking metadata kept alongside every stored object.
///
/// `last_sync_ms == None` means the key has never been synced and always
/// compares as dirty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMeta {
    pub first_update_ms: u64,
    pub last_update_ms: u64,
    pub updates_count: u64,
    pub last_sync_ms: Option<u64>,
}

impl KeyMeta {
    pub fn new(now_ms: u64) -> Self {
        Self {
            first_update_ms: now_ms,
            last_update_ms: now_ms,
            updates_count: 1,
            last_sync_ms: None,
        }
    }

    pub fn record_update(&mut self, now_ms: u64) {
        self.last_update_ms = self.last_update_ms.max(now_ms);
        self.updates_count += 1;
    }

    /// Average update rate in updates per second.
    ///
    /// A key written exactly once has rate 0 (a single write carries no
    /// frequency information). The elapsed time is floored at 1 ms to avoid
    /// division by zero.
    pub fn update_rate(&self) -> f64 {
        if self.updates_count <= 1 {
            return 0.0;
        }
        let elapsed_ms = (self.last_update_ms - self.first_update_ms).max(1);
        (self.updates_count - 1) as f64 * 1000.0 / elapsed_ms as f64
    }

    /// A key is dirty when it was updated after the last sync event.
    /// A never-synced key is always dirty.
    pub fn is_dirty(&self) -> bool {
        match self.last_sync_ms {
            None => true,
            Some(sync_ms) => self.last_update_ms > sync_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_from_counts_and_span() {
        let meta = KeyMeta {
            first_update_ms: 0,
            last_update_ms: 10_000,
            updates_count: 101,
            last_sync_ms: None,
        };
        assert_eq!(meta.update_rate(), 10.0);
    }

    #[test]
    fn single_write_has_rate_zero() {
        let meta = KeyMeta::new(5_000);
        assert_eq!(meta.updates_count, 1);
        assert_eq!(meta.update_rate(), 0.0);
    }

    #[test]
    fn elapsed_floor_is_one_ms() {
        let mut meta = KeyMeta::new(0);
        meta.record_update(0);
        assert_eq!(meta.updates_count, 2);
        assert_eq!(meta.update_rate(), 1000.0);
    }

    #[test]
    fn never_synced_is_dirty() {
        let meta = KeyMeta::new(100);
        assert!(meta.is_dirty());
    }

    #[test]
    fn synced_after_update_is_clean() {
        let mut meta = KeyMeta::new(100);
        meta.last_sync_ms = Some(100);
        assert!(!meta.is_dirty());
        meta.record_update(150);
        assert!(meta.is_dirty());
    }

    #[test]
    fn sync_time_before_update_stays_dirty() {
        // Conflict rule: sync records the time T before serialization; an
        // update landing while the transfer is in flight keeps the key dirty.
        let mut meta = KeyMeta::new(1);
        meta.last_sync_ms = Some(4);
        meta.record_update(5);
        assert!(meta.is_dirty());
    }
}
