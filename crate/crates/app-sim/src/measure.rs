//! Measurement series produced by scenario runs.

use sha2::{Digest, Sha256};

use edge_store::Store;

/// Per-handover measurement record.
#[derive(Debug, Clone)]
pub struct HandoverMeasurement {
    /// Handover signal time, milliseconds of simulated time.
    pub t_ho_ms: f64,
    /// Control-plane handover gap applied for this handover.
    pub gap_ms: f64,
    /// Blocking sync call-to-completion time.
    pub blocking_ms: f64,
    /// Session re-establishment round trip after state is in place.
    pub reconnect_ms: f64,
    /// Client-observed downtime: first unanswered request to first answered.
    pub downtime_ms: f64,
    /// Keys transferred during the blocking phase.
    pub residual_keys: u64,
    /// Keys transferred by background sync before this handover.
    pub background_keys: u64,
    pub mispredicted: bool,
    /// Target state digest equals the source digest taken at freeze time.
    pub checksum_ok: bool,
}

/// Full output of one scenario run.
#[derive(Debug, Clone, Default)]
pub struct Measurements {
    /// (t_ms, rtt_ms) for answered client requests.
    pub rtt: Vec<(f64, f64)>,
    pub handovers: Vec<HandoverMeasurement>,
    /// Total bytes per directed inter-edge link, keyed "src->dst".
    pub link_bytes: std::collections::BTreeMap<String, u64>,
    /// State payload vs protocol framing across all sync sessions.
    pub sync_value_bytes: u64,
    pub sync_framing_bytes: u64,
    /// Writes skipped because the app was in outage or frozen.
    pub skipped_writes: u64,
}

impl Measurements {
    pub fn total_sync_bytes(&self) -> u64 {
        self.link_bytes.values().sum()
    }

    pub fn median_blocking_ms(&self) -> f64 {
        median_of(self.handovers.iter().map(|h| h.blocking_ms))
    }

    pub fn median_downtime_ms(&self) -> f64 {
        median_of(self.handovers.iter().map(|h| h.downtime_ms))
    }

    pub fn all_checksums_ok(&self) -> bool {
        self.handovers.iter().all(|h| h.checksum_ok)
    }
}

pub fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// SHA-256 over the sorted (key, version, value) snapshot of a user's state.
pub fn state_digest(store: &Store, user_id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for (key, version, value) in store.state_snapshot(user_id) {
        hasher.update((key.len() as u64).to_be_bytes());
        hasher.update(&key);
        hasher.update(version.to_be_bytes());
        hasher.update((value.len() as u64).to_be_bytes());
        hasher.update(&value);
    }
    hasher.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_tracks_content_and_version() {
        let mut a = Store::new();
        let mut b = Store::new();
        a.put("u", b"k", b"v".to_vec(), 1).unwrap();
        b.apply_remote("u", b"k", Some(b"v".to_vec()), 1, 9);
        assert_eq!(state_digest(&a, "u"), state_digest(&b, "u"));
        b.apply_remote("u", b"k", Some(b"w".to_vec()), 2, 10);
        assert_ne!(state_digest(&a, "u"), state_digest(&b, "u"));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median_of([3.0, 1.0, 2.0].into_iter()), 2.0);
        assert_eq!(median_of([4.0, 1.0, 2.0, 3.0].into_iter()), 2.5);
    }
}
