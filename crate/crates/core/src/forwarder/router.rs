use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::cs::{ContentStore, DeadNonceList};
use super::fib::Fib;
use super::pit::{InRecord, InsertOutcome, Pit};
use crate::name::{rewrite_name, Name};
use crate::node::{FaceId, NodeId};
use crate::packet::{Data, Interest, InterestRed, Packet, PacketKind};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropCause {
    NoRoute,
    DuplicateNonce,
    Unsolicited,
    /// Redirected Interest with nothing to attach to (no PIT state, no face).
    Orphan,
}

impl DropCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DropCause::NoRoute => "no-route",
            DropCause::DuplicateNonce => "duplicate-nonce",
            DropCause::Unsolicited => "unsolicited-data",
            DropCause::Orphan => "orphan-red",
        }
    }
}

impl fmt::Display for DropCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send { face: FaceId, packet: Packet },
    Drop { kind: PacketKind, name: Name, nonce: Option<u64>, cause: DropCause },
}

impl Action {
    fn drop(kind: PacketKind, name: &Name, nonce: Option<u64>, cause: DropCause) -> Action {
        Action::Drop { kind, name: name.clone(), nonce, cause }
    }
}

/// Result of the PIT/CS half of Interest processing.
#[derive(Debug, Clone, PartialEq)]
pub enum Accepted {
    /// Answered from the content store (or dropped as a duplicate); nothing to forward.
    Done(Action),
    Aggregated,
    /// A PIT entry under this key needs forwarding upstream.
    Pending(Name),
}

#[derive(Debug, Clone, Copy)]
pub struct RouterConfig {
    pub cs_capacity: usize,
    pub pit_lifetime: SimDuration,
    pub dead_nonce_capacity: usize,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            cs_capacity: 1000,
            pit_lifetime: SimDuration::from_ms(4000.0),
            dead_nonce_capacity: 10_000,
        }
    }
}

/// One NDN node's forwarding state: FIB, PIT, content store, faces, plus the
/// redirect shortcuts learned from passing `InterestRed` packets.
#[derive(Debug, Clone)]
pub struct RouterState {
    pub node_id: NodeId,
    pub fib: Fib,
    pub pit: Pit,
    pub cs: ContentStore,
    faces: BTreeSet<FaceId>,
    dead_nonces: DeadNonceList,
    /// Producer tag component -> access-point prefix it currently lives under.
    shortcuts: BTreeMap<Arc<str>, Name>,
}

impl RouterState {
    pub fn new(node_id: NodeId, config: RouterConfig) -> Self {
        RouterState {
            node_id,
            fib: Fib::new(),
            pit: Pit::new(config.pit_lifetime),
            cs: ContentStore::new(config.cs_capacity),
            faces: BTreeSet::new(),
            dead_nonces: DeadNonceList::new(config.dead_nonce_capacity),
            shortcuts: BTreeMap::new(),
        }
    }

    pub fn faces(&self) -> &BTreeSet<FaceId> {
        &self.faces
    }

    pub fn add_face(&mut self, face: FaceId) {
        self.faces.insert(face);
    }

    /// Removes the face with every FIB route and PIT record that used it.
    pub fn remove_face(&mut self, face: FaceId) {
        self.faces.remove(&face);
        for e in self.fib.entries() {
            if e.next_face == face {
                self.fib.remove(&e.prefix);
            }
        }
        self.pit.remove_face(face);
    }

    /// Installs a route. Panics if the face is unknown.
    pub fn add_route(&mut self, prefix: &Name, face: FaceId) {
        assert!(self.faces.contains(&face), "{}: route {prefix} via unknown face {face}", self.node_id);
        self.fib.insert(prefix, face);
    }

    /// Records a flooded control packet; false if this router saw it before.
    pub fn note_nonce(&mut self, name: &Name, nonce: u64) -> bool {
        self.dead_nonces.insert(name, nonce)
    }

    pub fn shortcut(&self, tag: &str) -> Option<&Name> {
        self.shortcuts.get(tag)
    }

    pub fn shortcuts(&self) -> impl Iterator<Item = (&str, &Name)> {
        self.shortcuts.iter().map(|(k, v)| (k.as_ref(), v))
    }

    pub fn set_shortcut(&mut self, tag: &str, prefix: Name) {
        self.shortcuts.insert(Arc::from(tag), prefix);
    }

    /// Retargets an existing shortcut; no-op if none is installed for `tag`.
    pub fn refresh_shortcut(&mut self, tag: &str, prefix: &Name) -> bool {
        match self.shortcuts.get_mut(tag) {
            Some(p) => {
                *p = prefix.clone();
                true
            }
            None => false,
        }
    }

    /// Expires stale PIT entries; returns how many were removed.
    pub fn tick(&mut self, now: SimTime) -> usize {
        self.pit.purge_expired(now).len()
    }

    /// Content-store lookup, loop suppression and PIT bookkeeping for a plain
    /// Interest. Does not forward.
    pub fn accept_interest(&mut self, interest: &Interest, in_face: FaceId, now: SimTime) -> Accepted {
        self.tick(now);
        if let Some(data) = self.cs.get(&interest.name) {
            let mut data = data.clone();
            data.path.push(self.node_id);
            return Accepted::Done(Action::Send { face: in_face, packet: Packet::Data(data) });
        }
        if !self.dead_nonces.insert(&interest.name, interest.nonce) {
            return Accepted::Done(Action::drop(
                PacketKind::Interest,
                &interest.name,
                Some(interest.nonce),
                DropCause::DuplicateNonce,
            ));
        }
        let record = InRecord {
            face: in_face,
            nonce: interest.nonce,
            downstream_name: interest.name.clone(),
        };
        match self.pit.insert(&interest.name, record, now) {
            InsertOutcome::Aggregated => Accepted::Aggregated,
            InsertOutcome::Created | InsertOutcome::Retransmission => Accepted::Pending(interest.name.clone()),
        }
    }

    /// Full Interest pipeline: CS hit replies, PIT aggregation, otherwise
    /// forward on the longest-prefix match (or a learned redirect shortcut).
    pub fn process_interest(&mut self, interest: &Interest, in_face: FaceId, now: SimTime) -> Vec<Action> {
        match self.accept_interest(interest, in_face, now) {
            Accepted::Done(a) => vec![a],
            Accepted::Aggregated => Vec::new(),
            Accepted::Pending(key) => self.forward_pending(&key, now),
        }
    }

    /// The redirect shortcut that applies to `name`, as `(old_prefix, new_prefix)`.
    pub fn shortcut_for(&self, name: &Name) -> Option<(Name, Name)> {
        if self.shortcuts.is_empty() {
            return None;
        }
        (1..name.len()).find_map(|i| {
            let tag = name.component(i)?;
            let target = self.shortcuts.get(tag)?;
            let current = name.prefix(i)?;
            (current != *target).then(|| (current, target.clone()))
        })
    }

    /// Forwards the PIT entry at `key` upstream.
    pub fn forward_pending(&mut self, key: &Name, now: SimTime) -> Vec<Action> {
        let Some(entry) = self.pit.get(key) else {
            return Vec::new();
        };
        let nonce = entry.latest_nonce();
        if let Some((old, new)) = self.shortcut_for(key) {
            let new_name = rewrite_name(key, &old, &new).expect("shortcut prefix taken from the name");
            let red = InterestRed { name: new_name, original_name: key.clone(), nonce };
            return self.process_interest_red(&red, None, now);
        }
        match self.fib.longest_prefix_match(key) {
            Some(face) => {
                self.pit.get_mut(key).expect("checked").out_faces.push(face);
                vec![Action::Send {
                    face,
                    packet: Packet::Interest(Interest { name: key.clone(), nonce }),
                }]
            }
            None => {
                self.pit.remove(key);
                vec![Action::drop(PacketKind::Interest, key, Some(nonce), DropCause::NoRoute)]
            }
        }
    }

    /// Drops the PIT entry at `key` without forwarding.
    pub fn abandon(&mut self, key: &Name, cause: DropCause) -> Option<Action> {
        let entry = self.pit.remove(key)?;
        Some(Action::drop(PacketKind::Interest, key, Some(entry.latest_nonce()), cause))
    }

    /// Renames the pending entry at `key` to `new_name` and forwards it as a
    /// plain Interest. Data comes back under `new_name` and leaves renamed to
    /// whatever each downstream face asked for.
    pub fn rewrite_pending(&mut self, key: &Name, new_name: &Name, now: SimTime) -> Vec<Action> {
        self.tick(now);
        if !self.pit.rename(key, new_name) {
            return Vec::new();
        }
        let nonce = self.pit.get(new_name).expect("renamed").latest_nonce();
        match self.fib.longest_prefix_match(new_name) {
            Some(face) => {
                self.pit.get_mut(new_name).expect("renamed").out_faces.push(face);
                vec![Action::Send {
                    face,
                    packet: Packet::Interest(Interest { name: new_name.clone(), nonce }),
                }]
            }
            None => {
                self.pit.remove(new_name);
                vec![Action::drop(PacketKind::Interest, new_name, Some(nonce), DropCause::NoRoute)]
            }
        }
    }

    /// Redirect locally: turns the pending entry at `key` into an
    /// `InterestRed` named `new_name` and sends it on.
    pub fn redirect_pending(&mut self, key: &Name, new_name: &Name, now: SimTime) -> Vec<Action> {
        let Some(entry) = self.pit.get(key) else {
            return Vec::new();
        };
        let red = InterestRed {
            name: new_name.clone(),
            original_name: key.clone(),
            nonce: entry.latest_nonce(),
        };
        self.process_interest_red(&red, None, now)
    }

    /// PIT side of a redirected Interest: renames any entry recorded under the
    /// original name (keeping consumer-side faces), or creates a fresh one,
    /// and learns the redirect as a shortcut. Returns the PIT key and the
    /// name the next hop may know the Interest by. Does not forward.
    pub fn accept_interest_red(
        &mut self,
        red: &InterestRed,
        in_face: Option<FaceId>,
        now: SimTime,
    ) -> Result<(Name, Name), Action> {
        self.tick(now);
        if !self.dead_nonces.insert(&red.name, red.nonce) {
            return Err(Action::drop(
                PacketKind::InterestRed,
                &red.name,
                Some(red.nonce),
                DropCause::DuplicateNonce,
            ));
        }
        if let Some((_, new_prefix, tag)) = red.prefixes() {
            self.shortcuts.insert(Arc::from(tag), new_prefix);
        }
        let mut upstream_alias = red.original_name.clone();
        let existing = self.pit.resolve(&red.original_name).or_else(|| self.pit.resolve(&red.name));
        match existing {
            Some(key) => {
                let bounced = in_face.is_none_or(|f| self.pit.get(&key).is_some_and(|e| e.out_faces.contains(&f)));
                upstream_alias = key.clone();
                self.pit.rename(&key, &red.name);
                if !bounced {
                    let face = in_face.expect("bounced is true without a face");
                    self.pit.insert(
                        &red.name,
                        InRecord { face, nonce: red.nonce, downstream_name: red.name.clone() },
                        now,
                    );
                }
            }
            None => {
                let Some(face) = in_face else {
                    return Err(Action::drop(PacketKind::InterestRed, &red.name, Some(red.nonce), DropCause::Orphan));
                };
                self.pit.insert(
                    &red.name,
                    InRecord { face, nonce: red.nonce, downstream_name: red.name.clone() },
                    now,
                );
            }
        }
        Ok((red.name.clone(), upstream_alias))
    }

    /// Forwards the redirected Interest held at `key` by longest-prefix match.
    pub fn forward_red(&mut self, key: &Name, original_name: &Name, nonce: u64) -> Vec<Action> {
        match self.fib.longest_prefix_match(key) {
            Some(face) => {
                if let Some(e) = self.pit.get_mut(key) {
                    e.out_faces.push(face);
                }
                vec![Action::Send {
                    face,
                    packet: Packet::InterestRed(InterestRed {
                        name: key.clone(),
                        original_name: original_name.clone(),
                        nonce,
                    }),
                }]
            }
            None => {
                self.pit.remove(key);
                vec![Action::drop(PacketKind::InterestRed, key, Some(nonce), DropCause::NoRoute)]
            }
        }
    }

    /// Full `InterestRed` pipeline. `in_face` is `None` when this router
    /// originates the redirect itself.
    pub fn process_interest_red(&mut self, red: &InterestRed, in_face: Option<FaceId>, now: SimTime) -> Vec<Action> {
        match self.accept_interest_red(red, in_face, now) {
            Ok((key, alias)) => self.forward_red(&key, &alias, red.nonce),
            Err(a) => vec![a],
        }
    }

    /// Data pipeline: satisfy the PIT entry (renaming per downstream face),
    /// cache, or drop when unsolicited.
    pub fn process_data(&mut self, data: &Data, _in_face: FaceId, now: SimTime) -> Vec<Action> {
        self.tick(now);
        let Some(key) = self.pit.resolve(&data.name) else {
            return vec![Action::drop(PacketKind::Data, &data.name, None, DropCause::Unsolicited)];
        };
        let entry = self.pit.remove(&key).expect("resolved");
        let mut sent: Vec<(FaceId, &Name)> = Vec::new();
        let mut out = Vec::new();
        for r in &entry.in_records {
            if sent.iter().any(|(f, n)| *f == r.face && **n == r.downstream_name) {
                continue;
            }
            sent.push((r.face, &r.downstream_name));
            let mut path = data.path.clone();
            path.push(self.node_id);
            out.push(Action::Send {
                face: r.face,
                packet: Packet::Data(Data {
                    name: r.downstream_name.clone(),
                    payload_size: data.payload_size,
                    path,
                }),
            });
        }
        self.cs.insert(data.clone());
        out
    }
}
