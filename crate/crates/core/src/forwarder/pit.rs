use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::name::Name;
use crate::node::FaceId;
use crate::time::{SimDuration, SimTime};

/// One downstream requester. `downstream_name` is the name the Interest
/// carried when it arrived on `face`; Data is renamed back to it on the way
/// out, so a rewrite upstream stays invisible downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InRecord {
    pub face: FaceId,
    pub nonce: u64,
    pub downstream_name: Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    /// The name this router forwarded upstream, and the Data name it expects.
    pub name: Name,
    pub in_records: Vec<InRecord>,
    /// Every face this entry was forwarded on, across renames.
    pub out_faces: Vec<FaceId>,
    pub expiry: SimTime,
    pub former_names: Vec<Name>,
}

impl PitEntry {
    pub fn latest_nonce(&self) -> u64 {
        self.in_records.last().map(|r| r.nonce).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Created,
    /// New downstream face on an existing entry; no need to forward again.
    Aggregated,
    /// Same face asked again with a fresh nonce.
    Retransmission,
}

#[derive(Debug, Clone)]
pub struct Pit {
    entries: BTreeMap<Name, PitEntry>,
    aliases: BTreeMap<Name, Name>,
    expiries: BinaryHeap<Reverse<(SimTime, Name)>>,
    lifetime: SimDuration,
}

impl Pit {
    pub fn new(lifetime: SimDuration) -> Self {
        Pit {
            entries: BTreeMap::new(),
            aliases: BTreeMap::new(),
            expiries: BinaryHeap::new(),
            lifetime,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &Name) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &Name) -> Option<&mut PitEntry> {
        self.entries.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }

    /// Current key for `name`, following renames.
    pub fn resolve(&self, name: &Name) -> Option<Name> {
        if self.entries.contains_key(name) {
            return Some(name.clone());
        }
        self.aliases.get(name).filter(|k| self.entries.contains_key(*k)).cloned()
    }

    /// Keys of all live entries under `prefix`, in name order.
    pub fn names_under(&self, prefix: &Name) -> Vec<Name> {
        self.entries
            .range(prefix.clone()..)
            .take_while(|(k, _)| prefix.is_prefix_of(k))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn insert(&mut self, name: &Name, record: InRecord, now: SimTime) -> InsertOutcome {
        let expiry = now + self.lifetime;
        let outcome = match self.entries.get_mut(name) {
            Some(entry) => {
                entry.expiry = expiry;
                match entry.in_records.iter_mut().find(|r| r.face == record.face) {
                    Some(r) => {
                        r.nonce = record.nonce;
                        r.downstream_name = record.downstream_name;
                        InsertOutcome::Retransmission
                    }
                    None => {
                        entry.in_records.push(record);
                        InsertOutcome::Aggregated
                    }
                }
            }
            None => {
                self.entries.insert(
                    name.clone(),
                    PitEntry {
                        name: name.clone(),
                        in_records: vec![record],
                        out_faces: Vec::new(),
                        expiry,
                        former_names: Vec::new(),
                    },
                );
                InsertOutcome::Created
            }
        };
        self.expiries.push(Reverse((expiry, name.clone())));
        outcome
    }

    /// Re-keys the entry at `key` under `new_name`. In-records keep their
    /// downstream names. If an entry already lives at `new_name` the two merge.
    pub fn rename(&mut self, key: &Name, new_name: &Name) -> bool {
        if key == new_name {
            return self.entries.contains_key(key);
        }
        let Some(mut entry) = self.entries.remove(key) else {
            return false;
        };
        entry.former_names.push(key.clone());
        entry.name = new_name.clone();
        for old in &entry.former_names {
            self.aliases.insert(old.clone(), new_name.clone());
        }
        self.aliases.remove(new_name);
        let entry = match self.entries.remove(new_name) {
            Some(mut existing) => {
                for r in entry.in_records {
                    if !existing.in_records.iter().any(|x| x.face == r.face) {
                        existing.in_records.push(r);
                    }
                }
                existing.former_names.extend(entry.former_names);
                existing.expiry = existing.expiry.max(entry.expiry);
                existing
            }
            None => entry,
        };
        self.expiries.push(Reverse((entry.expiry, new_name.clone())));
        self.entries.insert(new_name.clone(), entry);
        true
    }

    pub fn remove(&mut self, name: &Name) -> Option<PitEntry> {
        let entry = self.entries.remove(name)?;
        for old in &entry.former_names {
            if self.aliases.get(old) == Some(name) {
                self.aliases.remove(old);
            }
        }
        Some(entry)
    }

    /// Removes and returns every entry whose lifetime ended at or before `now`.
    pub fn purge_expired(&mut self, now: SimTime) -> Vec<PitEntry> {
        let mut gone = Vec::new();
        while let Some(Reverse((t, _))) = self.expiries.peek() {
            if *t > now {
                break;
            }
            let Reverse((_, name)) = self.expiries.pop().expect("peeked");
            let live = self.entries.get(&name).is_some_and(|e| e.expiry <= now);
            if live {
                gone.extend(self.remove(&name));
            }
        }
        gone
    }

    /// Drops `face` from every entry; entries left with no requester are removed.
    pub fn remove_face(&mut self, face: FaceId) {
        let mut empty = Vec::new();
        for (k, e) in self.entries.iter_mut() {
            e.in_records.retain(|r| r.face != face);
            e.out_faces.retain(|f| *f != face);
            if e.in_records.is_empty() {
                empty.push(k.clone());
            }
        }
        for k in empty {
            self.remove(&k);
        }
    }
}
