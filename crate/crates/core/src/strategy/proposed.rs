//! Location-prediction handover: the producer reports where it is heading,
//! the old AP redirects pending Interests there, and the new AP holds them
//! until the producer shows up.

use std::collections::{BTreeMap, VecDeque};

use super::{producer_of, select_nap, Ctx, Strategy, StrategyId, StrategyParams, TimerId};
use crate::engine::topology::{ap_prefix, Topology};
use crate::engine::trace::TraceEvent;
use crate::forwarder::{Accepted, Action};
use crate::mobility::Point;
use crate::name::{rewrite_name, Name};
use crate::node::NodeId;
use crate::packet::{InterestPu, Packet, PacketKind, PrefixAnnouncement};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct StoredInterest {
    /// PIT key of the redirected entry at the old AP.
    pub key: Name,
    pub nonce: u64,
    pub stored_at: SimTime,
}

/// Old-AP state for one departing producer.
#[derive(Debug, Clone, PartialEq)]
pub struct OapRedirectState {
    pub predicted_nap: Option<u16>,
    /// Prefix Interests are redirected to once the producer is gone.
    pub target: Option<Name>,
    pub stored: Vec<StoredInterest>,
    pub t_s: SimDuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Buffered {
    pub key: Name,
    pub upstream: Name,
    pub nonce: u64,
    pub arrived: SimTime,
}

/// Redirected Interests waiting at a new AP for the producer to attach.
#[derive(Debug, Clone, PartialEq)]
pub struct NapBuffer {
    pub buffered: VecDeque<Buffered>,
    pub max_wait: SimDuration,
}

pub struct LocationPrediction {
    t_s: SimDuration,
    max_wait: SimDuration,
    grace: SimDuration,
    tags: Vec<String>,
    oap: BTreeMap<(u16, u16), OapRedirectState>,
    nap: BTreeMap<(u16, u16), NapBuffer>,
    /// Per producer: current reattachment epoch and whether anything arrived since.
    grace_state: BTreeMap<u16, (u64, bool)>,
    epoch: u64,
}

impl LocationPrediction {
    pub fn new(params: &StrategyParams, topo: &Topology, l2_ms: f64) -> Self {
        LocationPrediction {
            t_s: params.store_time(l2_ms),
            max_wait: params.nap_max_wait(l2_ms),
            grace: params.grace(l2_ms),
            tags: topo.producers.iter().map(|p| p.tag.clone()).collect(),
            oap: BTreeMap::new(),
            nap: BTreeMap::new(),
            grace_state: BTreeMap::new(),
            epoch: 0,
        }
    }

    pub fn oap_state(&self, ap: u16, producer: u16) -> Option<&OapRedirectState> {
        self.oap.get(&(ap, producer))
    }

    pub fn nap_buffer(&self, ap: u16, producer: u16) -> Option<&NapBuffer> {
        self.nap.get(&(ap, producer))
    }

    fn state(&mut self, ap: u16, producer: u16) -> &mut OapRedirectState {
        let t_s = self.t_s;
        self.oap.entry((ap, producer)).or_insert_with(|| OapRedirectState {
            predicted_nap: None,
            target: None,
            stored: Vec::new(),
            t_s,
        })
    }

    /// Sends the pending entry at `key` toward `target` as an InterestRed,
    /// keeping a copy for recovery if `store`. Returns whether anything left the AP.
    fn redirect(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, key: &Name, target: &Name, store: bool) -> bool {
        let Some(old) = key.prefix(2) else {
            return false;
        };
        let Ok(new_name) = rewrite_name(key, &old, target) else {
            return false;
        };
        let now = ctx.now;
        let actions = ctx.ap(ap).redirect_pending(key, &new_name, now);
        let sent = actions.iter().any(|a| matches!(a, Action::Send { .. }));
        ctx.emit(NodeId::Ap(ap), actions);
        if sent && store {
            let nonce = ctx.ap(ap).pit.get(&new_name).map(|e| e.latest_nonce());
            if let Some(nonce) = nonce {
                let now = ctx.now;
                let t_s = self.t_s;
                self.state(ap, producer).stored.push(StoredInterest { key: new_name.clone(), nonce, stored_at: now });
                ctx.note(NodeId::Ap(ap), TraceEvent::Store, Some(new_name), Some(nonce), format!("t_s={}", SimTime(0) + t_s));
                ctx.timer(NodeId::Ap(ap), t_s, TimerId::StoreExpiry { producer });
            }
        }
        sent
    }

    fn buffer(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, key: Name, upstream: Name, nonce: u64) {
        let now = ctx.now;
        let max_wait = self.max_wait;
        ctx.note(NodeId::Ap(ap), TraceEvent::Buffer, Some(key.clone()), Some(nonce), "");
        self.nap
            .entry((ap, producer))
            .or_insert_with(|| NapBuffer { buffered: VecDeque::new(), max_wait })
            .buffered
            .push_back(Buffered { key, upstream, nonce, arrived: now });
        ctx.timer(NodeId::Ap(ap), max_wait, TimerId::NapExpiry { producer });
    }
}

impl Strategy for LocationPrediction {
    fn id(&self) -> StrategyId {
        StrategyId::Proposed
    }

    fn on_rss_trigger(&mut self, ctx: &mut Ctx, producer: u16, oap: Option<u16>, predicted: Point) {
        let Some(oap) = oap else {
            return;
        };
        let nonce = ctx.next_nonce();
        let name = ap_prefix(oap).child(&self.tags[producer as usize]).child("pu").child(nonce.to_string());
        ctx.send(
            NodeId::Producer(producer),
            NodeId::Ap(oap),
            Packet::InterestPu(InterestPu { name, nonce, predicted }),
        );
    }

    fn on_interest_pu(&mut self, ctx: &mut Ctx, ap: u16, pu: &InterestPu) {
        let Some(producer) = producer_of(ctx.topo, &pu.name) else {
            return;
        };
        let Ok(nap) = select_nap(&ctx.topo.aps, pu.predicted, Some(ap)) else {
            return;
        };
        self.state(ap, producer).predicted_nap = Some(nap);
        let cause = format!("{}->ap{nap}", self.tags[producer as usize]);
        ctx.note(NodeId::Ap(ap), TraceEvent::Predict, Some(pu.name.clone()), Some(pu.nonce), cause);
    }

    fn on_producer_unreachable(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, forced_nap: Option<u16>) {
        let state = self.state(ap, producer);
        let Some(nap) = forced_nap.or(state.predicted_nap) else {
            ctx.note(NodeId::Ap(ap), TraceEvent::Predict, None, None, "unmanaged");
            return;
        };
        state.predicted_nap = Some(nap);
        let target = ap_prefix(nap);
        state.target = Some(target.clone());
        let own = ap_prefix(ap).child(&self.tags[producer as usize]);
        let pending = ctx.ap(ap).pit.names_under(&own);
        for key in pending {
            self.redirect(ctx, ap, producer, &key, &target, true);
        }
    }

    fn on_absent_producer(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, packet: &Packet, in_face: NodeId) -> bool {
        let target = self.oap.get(&(ap, producer)).and_then(|s| s.target.clone());
        match packet {
            Packet::Interest(interest) => {
                let Some(target) = target else {
                    ctx.drop_packet(NodeId::Ap(ap), packet.clone(), "unmanaged");
                    return true;
                };
                let now = ctx.now;
                match ctx.ap(ap).accept_interest(interest, in_face, now) {
                    Accepted::Done(a) => ctx.emit(NodeId::Ap(ap), vec![a]),
                    Accepted::Aggregated => {}
                    Accepted::Pending(key) => {
                        self.redirect(ctx, ap, producer, &key, &target, true);
                    }
                }
                true
            }
            Packet::InterestRed(red) => {
                let returning = target.as_ref().is_some_and(|t| red.prefixes().is_some_and(|(old, _, _)| old == *t));
                let now = ctx.now;
                let accepted = ctx.ap(ap).accept_interest_red(red, Some(in_face), now);
                let (key, upstream) = match accepted {
                    Ok(k) => k,
                    Err(a) => {
                        ctx.emit(NodeId::Ap(ap), vec![a]);
                        return true;
                    }
                };
                match target {
                    Some(target) if !returning => {
                        self.redirect(ctx, ap, producer, &key, &target, true);
                    }
                    _ => {
                        if returning {
                            self.oap.remove(&(ap, producer));
                        }
                        self.buffer(ctx, ap, producer, key, upstream, red.nonce);
                    }
                }
                true
            }
            _ => false,
        }
    }

    fn on_prefix_announcement(&mut self, ctx: &mut Ctx, node: NodeId, ann: &PrefixAnnouncement) {
        let Some(tag) = ann.announced_prefix.component(2).map(str::to_string) else {
            return;
        };
        let Some(producer) = ctx.topo.producer_by_tag(&tag) else {
            return;
        };
        let Some(new_prefix) = ann.announced_prefix.prefix(2) else {
            return;
        };
        ctx.router(node).set_shortcut(&tag, new_prefix.clone());
        let NodeId::Ap(ap) = node else {
            return;
        };
        let Some(state) = self.oap.get_mut(&(ap, producer)) else {
            return;
        };
        if state.target.as_ref().is_none_or(|t| *t == new_prefix) {
            return;
        }
        state.target = Some(new_prefix.clone());
        let t_s = state.t_s;
        let now = ctx.now;
        let live: Vec<StoredInterest> =
            std::mem::take(&mut state.stored).into_iter().filter(|s| s.stored_at + t_s > now).collect();
        for copy in live {
            if ctx.ap(ap).pit.get(&copy.key).is_none() {
                continue;
            }
            ctx.note(NodeId::Ap(ap), TraceEvent::Recover, Some(copy.key.clone()), Some(copy.nonce), new_prefix.to_string());
            self.redirect(ctx, ap, producer, &copy.key, &new_prefix, false);
        }
    }

    fn on_reattach(&mut self, ctx: &mut Ctx, producer: u16, _old_ap: u16, new_ap: u16) {
        self.oap.remove(&(new_ap, producer));
        if let Some(buf) = self.nap.remove(&(new_ap, producer)) {
            for b in buf.buffered {
                if ctx.ap(new_ap).pit.get(&b.key).is_none() {
                    continue;
                }
                ctx.note(NodeId::Ap(new_ap), TraceEvent::Flush, Some(b.key.clone()), Some(b.nonce), "");
                let actions = ctx.ap(new_ap).forward_red(&b.key, &b.upstream, b.nonce);
                ctx.emit(NodeId::Ap(new_ap), actions);
            }
        }
        self.epoch += 1;
        self.grace_state.insert(producer, (self.epoch, false));
        ctx.timer(NodeId::Producer(producer), self.grace, TimerId::Grace { producer, epoch: self.epoch });
    }

    fn on_producer_receive(&mut self, _ctx: &mut Ctx, producer: u16) {
        if let Some(g) = self.grace_state.get_mut(&producer) {
            g.1 = true;
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, node: NodeId, timer: TimerId) {
        let now = ctx.now;
        match (node, timer) {
            (NodeId::Ap(ap), TimerId::StoreExpiry { producer }) => {
                let Some(state) = self.oap.get_mut(&(ap, producer)) else {
                    return;
                };
                let t_s = state.t_s;
                let (expired, kept): (Vec<_>, Vec<_>) =
                    std::mem::take(&mut state.stored).into_iter().partition(|s| s.stored_at + t_s <= now);
                state.stored = kept;
                for s in expired {
                    ctx.note(NodeId::Ap(ap), TraceEvent::Discard, Some(s.key), Some(s.nonce), "");
                }
            }
            (NodeId::Ap(ap), TimerId::NapExpiry { producer }) => {
                let Some(buf) = self.nap.get_mut(&(ap, producer)) else {
                    return;
                };
                let max_wait = buf.max_wait;
                while buf.buffered.front().is_some_and(|b| b.arrived + max_wait <= now) {
                    let b = buf.buffered.pop_front().expect("checked");
                    if ctx.ap(ap).pit.remove(&b.key).is_some() {
                        ctx.drop_name(NodeId::Ap(ap), PacketKind::InterestRed, &b.key, Some(b.nonce), "nap-buffer-timeout");
                    }
                }
            }
            (_, TimerId::Grace { producer, epoch }) => {
                if self.grace_state.get(&producer) != Some(&(epoch, false)) {
                    return;
                }
                let Some(ap) = ctx.attached[producer as usize] else {
                    return;
                };
                let nonce = ctx.next_nonce();
                let announced_prefix = ap_prefix(ap).child(&self.tags[producer as usize]);
                ctx.note(NodeId::Producer(producer), TraceEvent::Announce, Some(announced_prefix.clone()), Some(nonce), "");
                ctx.send(
                    NodeId::Producer(producer),
                    NodeId::Ap(ap),
                    Packet::PrefixAnnouncement(PrefixAnnouncement { announced_prefix, nonce }),
                );
            }
            _ => {}
        }
    }
}
