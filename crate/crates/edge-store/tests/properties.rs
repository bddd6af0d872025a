//! Property tests for meta-state bookkeeping and dirty tracking.

use proptest::prelude::*;

use edge_store::{Store, StoreError};

#[derive(Debug, Clone)]
enum Op {
    Put { key: u8, size: u8 },
    Delete { key: u8 },
    Sync { key: u8 },
    Advance { ms: u16 },
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0u8..12, 1u8..64).prop_map(|(key, size)| Op::Put { key, size }),
        1 => (0u8..12).prop_map(|key| Op::Delete { key }),
        2 => (0u8..12).prop_map(|key| Op::Sync { key }),
        2 => (1u16..500).prop_map(|ms| Op::Advance { ms }),
    ]
}

proptest! {
    /// last_update_time and updates_count never decrease, and a key is in
    /// dirty_keys exactly when last_update_time > last_sync_time.
    #[test]
    fn meta_monotonic_and_dirty_set_exact(ops in proptest::collection::vec(op_strategy(), 1..200)) {
        let mut store = Store::new();
        let mut now = 0u64;
        let mut shadow: std::collections::BTreeMap<Vec<u8>, (u64, u64)> = Default::default();

        for op in ops {
            match op {
                Op::Put { key, size } => {
                    let key = vec![b'k', key];
                    let before = store.get_object("u", &key).ok();
                    store.put("u", &key, vec![0u8; size as usize], now).unwrap();
                    let after = store.get_object("u", &key).unwrap();
                    if let Some(before) = before {
                        prop_assert!(after.meta.last_update_ms >= before.meta.last_update_ms);
                        prop_assert!(after.meta.updates_count == before.meta.updates_count + 1);
                        prop_assert_eq!(after.version, before.version + 1);
                    }
                    prop_assert!(after.meta.first_update_ms <= after.meta.last_update_ms);
                    shadow.insert(key, (after.meta.last_update_ms, after.meta.updates_count));
                }
                Op::Delete { key } => {
                    let key = vec![b'k', key];
                    match store.delete("u", &key, now) {
                        Ok(()) => { shadow.remove(&key); }
                        Err(StoreError::NotFound) => prop_assert!(!shadow.contains_key(&key)),
                        Err(e) => return Err(TestCaseError::fail(format!("unexpected {e}"))),
                    }
                }
                Op::Sync { key } => {
                    let key = vec![b'k', key];
                    store.mark_synced("u", &key, now);
                }
                Op::Advance { ms } => now += ms as u64,
            }

            // Dirty soundness and completeness against the raw meta.
            let dirty: std::collections::BTreeSet<_> =
                store.dirty_keys("u").into_iter().collect();
            for (key, _) in &shadow {
                let obj = store.get_object("u", key).unwrap();
                let expect_dirty = match obj.meta.last_sync_ms {
                    None => true,
                    Some(sync) => obj.meta.last_update_ms > sync,
                };
                prop_assert_eq!(dirty.contains(key), expect_dirty);
            }
            // Everything reported dirty must exist.
            for key in &dirty {
                prop_assert!(shadow.contains_key(key));
            }
        }
    }

    /// dirty_keys is ordered by ascending update rate with lexicographic
    /// tie-breaking.
    #[test]
    fn dirty_order_is_rate_then_lex(ops in proptest::collection::vec(op_strategy(), 1..150)) {
        let mut store = Store::new();
        let mut now = 1u64;
        for op in ops {
            match op {
                Op::Put { key, size } => {
                    store.put("u", &[b'k', key], vec![0u8; size as usize], now).unwrap();
                }
                Op::Sync { key } => store.mark_synced("u", &[b'k', key], now),
                Op::Delete { key } => { let _ = store.delete("u", &[b'k', key], now); }
                Op::Advance { ms } => now += ms as u64,
            }
            let dirty = store.dirty_keys("u");
            let rates: Vec<(f64, &Vec<u8>)> = dirty
                .iter()
                .map(|k| (store.update_rate("u", k).unwrap(), k))
                .collect();
            for pair in rates.windows(2) {
                let (ra, ka) = (&pair[0].0, pair[0].1);
                let (rb, kb) = (&pair[1].0, pair[1].1);
                prop_assert!(ra < rb || (ra == rb && ka < kb),
                    "order violated: ({ra},{ka:?}) before ({rb},{kb:?})");
            }
        }
    }
}
