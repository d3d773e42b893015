use std::collections::{HashMap, HashSet, VecDeque};

use crate::name::Name;
use crate::packet::Data;

/// FIFO content store with a fixed entry capacity.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    entries: HashMap<Name, Data>,
    order: VecDeque<Name>,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore {
            capacity,
            entries: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &Name) -> Option<&Data> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    /// Inserts `data`, evicting oldest entries first. Returns the evicted names.
    /// Re-inserting a cached name refreshes its content but not its position.
    pub fn insert(&mut self, data: Data) -> Vec<Name> {
        if self.capacity == 0 {
            return Vec::new();
        }
        if let Some(slot) = self.entries.get_mut(&data.name) {
            *slot = data;
            return Vec::new();
        }
        let mut evicted = Vec::new();
        while self.entries.len() >= self.capacity {
            let Some(old) = self.order.pop_front() else { break };
            self.entries.remove(&old);
            evicted.push(old);
        }
        self.order.push_back(data.name.clone());
        self.entries.insert(data.name.clone(), data);
        evicted
    }
}

/// Recently seen (name, nonce) pairs, bounded FIFO.
#[derive(Debug, Clone)]
pub struct DeadNonceList {
    capacity: usize,
    seen: HashSet<(Name, u64)>,
    order: VecDeque<(Name, u64)>,
}

impl DeadNonceList {
    pub fn new(capacity: usize) -> Self {
        DeadNonceList {
            capacity,
            seen: HashSet::new(),
            order: VecDeque::new(),
        }
    }

    pub fn contains(&self, name: &Name, nonce: u64) -> bool {
        self.seen.contains(&(name.clone(), nonce))
    }

    /// Records the pair; false if it was already present.
    pub fn insert(&mut self, name: &Name, nonce: u64) -> bool {
        let key = (name.clone(), nonce);
        if !self.seen.insert(key.clone()) {
            return false;
        }
        self.order.push_back(key);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.seen.remove(&old);
            }
        }
        true
    }
}
