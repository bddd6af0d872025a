//! UE records and the Set/Revert priority APIs.
//!
//! The AMF-side API is keyed by the UE's IP address; the AMF translates it
//! to the NG-AP identifiers and mirrors the change into the RAN-side table,
//! so both stages enqueue subsequent messages in the new class. No UE-side
//! state is involved anywhere.

use std::collections::BTreeMap;
use std::collections::HashMap;

use crate::types::{CpError, UeClass};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeRecord {
    pub ue_id: u64,
    pub ip_address: String,
    pub ran_ngap_id: u64,
    pub amf_ngap_id: u64,
    pub klass: UeClass,
    /// Class before any promotion; HP is never a base class.
    pub base_klass: UeClass,
}

#[derive(Debug, Default)]
pub struct Registry {
    ues: BTreeMap<u64, UeRecord>,
    by_ip: HashMap<String, u64>,
    /// RAN-side class table keyed by RAN UE NGAP ID.
    ran_table: BTreeMap<u64, UeClass>,
    next_ngap: u64,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Attaches a UE with its base class (MP or LP).
    pub fn attach(&mut self, ue_id: u64, ip_address: &str, base_klass: UeClass) -> &UeRecord {
        assert_ne!(base_klass, UeClass::Hp, "HP is not a base class");
        self.next_ngap += 1;
        let record = UeRecord {
            ue_id,
            ip_address: ip_address.to_string(),
            ran_ngap_id: self.next_ngap,
            amf_ngap_id: self.next_ngap + 1_000_000,
            klass: base_klass,
            base_klass,
        };
        self.ran_table.insert(record.ran_ngap_id, base_klass);
        self.by_ip.insert(ip_address.to_string(), ue_id);
        self.ues.insert(ue_id, record);
        &self.ues[&ue_id]
    }

    pub fn get(&self, ue_id: u64) -> Option<&UeRecord> {
        self.ues.get(&ue_id)
    }

    pub fn contains(&self, ue_id: u64) -> bool {
        self.ues.contains_key(&ue_id)
    }

    /// Class used when enqueuing a message for this UE.
    pub fn klass_of(&self, ue_id: u64) -> Result<UeClass, CpError> {
        self.ues
            .get(&ue_id)
            .map(|r| r.klass)
            .ok_or(CpError::UnknownUe)
    }

    /// RAN-side class lookup by RAN UE NGAP ID.
    pub fn ran_klass(&self, ran_ngap_id: u64) -> Option<UeClass> {
        self.ran_table.get(&ran_ngap_id).copied()
    }

    /// AMF-side Set_Priority: promotes an MP UE to HP for the duration of a
    /// latency-sensitive session and propagates the change to the RAN table.
    pub fn set_priority(&mut self, ip_address: &str) -> Result<(), CpError> {
        let ue_id = *self.by_ip.get(ip_address).ok_or(CpError::UnknownIp)?;
        let record = self.ues.get_mut(&ue_id).expect("indexed ue exists");
        if record.base_klass != UeClass::Mp {
            return Err(CpError::NotEligible);
        }
        record.klass = UeClass::Hp;
        let ran_id = record.ran_ngap_id;
        self.ran_set_priority(ran_id, UeClass::Hp);
        Ok(())
    }

    /// AMF-side Revert_Priority: restores the base class. Idempotent.
    pub fn revert_priority(&mut self, ip_address: &str) -> Result<(), CpError> {
        let ue_id = *self.by_ip.get(ip_address).ok_or(CpError::UnknownIp)?;
        let record = self.ues.get_mut(&ue_id).expect("indexed ue exists");
        record.klass = record.base_klass;
        let (ran_id, base) = (record.ran_ngap_id, record.base_klass);
        self.ran_set_priority(ran_id, base);
        Ok(())
    }

    /// RAN-side priority table update, keyed by RAN UE NGAP ID.
    pub fn ran_set_priority(&mut self, ran_ngap_id: u64, klass: UeClass) {
        self.ran_table.insert(ran_ngap_id, klass);
    }

    pub fn ue_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.ues.keys().copied()
    }
}
