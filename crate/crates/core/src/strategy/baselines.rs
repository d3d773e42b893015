//! Reference strategies the proposed scheme is measured against.

use std::collections::BTreeMap;

use super::{Ctx, Strategy, StrategyId, StrategyParams, TimerId, ZoneShape};
use crate::engine::topology::{ap_prefix, Topology};
use crate::engine::trace::TraceEvent;
use crate::forwarder::Accepted;
use crate::name::{rewrite_name, Name};
use crate::node::NodeId;
use crate::packet::{Notice, NoticeBody, Packet};
use crate::time::SimDuration;

/// Nothing is done on handover. Interests for a departed producer are lost
/// until routing converges on its new location.
pub struct NoManagement {
    convergence: SimDuration,
    home: Vec<Name>,
    epochs: Vec<u64>,
}

impl NoManagement {
    pub fn new(params: &StrategyParams, topo: &Topology) -> Self {
        NoManagement {
            convergence: SimDuration::from_ms(params.convergence_ms),
            home: topo.producers.iter().map(|p| ap_prefix(p.home_ap).child(&p.tag)).collect(),
            epochs: vec![0; topo.producers.len()],
        }
    }
}

impl Strategy for NoManagement {
    fn id(&self) -> StrategyId {
        StrategyId::NoManagement
    }

    fn on_producer_unreachable(&mut self, _ctx: &mut Ctx, _ap: u16, producer: u16, _forced_nap: Option<u16>) {
        self.epochs[producer as usize] += 1;
    }

    fn on_absent_producer(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, packet: &Packet, _in_face: NodeId) -> bool {
        let home = &self.home[producer as usize];
        if home.is_prefix_of(packet.name()) && ctx.ap(ap).fib.get(home).is_some() {
            return false;
        }
        ctx.drop_packet(NodeId::Ap(ap), packet.clone(), "producer-detached");
        true
    }

    fn on_reattach(&mut self, ctx: &mut Ctx, producer: u16, _old_ap: u16, _new_ap: u16) {
        let epoch = &mut self.epochs[producer as usize];
        *epoch += 1;
        ctx.timer(NodeId::Producer(producer), self.convergence, TimerId::Convergence { producer, epoch: *epoch });
    }

    fn on_timer(&mut self, ctx: &mut Ctx, _node: NodeId, timer: TimerId) {
        let TimerId::Convergence { producer, epoch } = timer else {
            return;
        };
        if self.epochs[producer as usize] != epoch {
            return;
        }
        let Some(ap) = ctx.attached[producer as usize] else {
            return;
        };
        let home = self.home[producer as usize].clone();
        let topo = ctx.topo;
        for node in topo.routers() {
            let face = if node == NodeId::Ap(ap) { Some(NodeId::Producer(producer)) } else { topo.next_hop(node, ap) };
            if let Some(face) = face {
                ctx.router(node).add_route(&home, face);
            }
        }
        ctx.note(NodeId::Producer(producer), TraceEvent::Converge, Some(home), None, format!("ap{ap}"));
    }
}

/// The old AP parks Interests until the reattached producer sends it a
/// mobility update, then forwards them to the new prefix.
#[derive(Default)]
pub struct InterestForwarding {
    /// `(ap, producer)` -> where that AP forwards, once known.
    fwd: BTreeMap<(u16, u16), Option<Name>>,
}

impl InterestForwarding {
    pub fn new() -> Self {
        Self::default()
    }

    fn forward(ctx: &mut Ctx, ap: u16, key: &Name, target: &Name) {
        let Some(old) = key.prefix(2) else {
            return;
        };
        let Ok(new_name) = rewrite_name(key, &old, target) else {
            return;
        };
        let now = ctx.now;
        let actions = ctx.ap(ap).rewrite_pending(key, &new_name, now);
        ctx.emit(NodeId::Ap(ap), actions);
    }
}

impl Strategy for InterestForwarding {
    fn id(&self) -> StrategyId {
        StrategyId::InterestForwarding
    }

    fn on_producer_unreachable(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, _forced_nap: Option<u16>) {
        self.fwd.insert((ap, producer), None);
        ctx.note(NodeId::Ap(ap), TraceEvent::Park, None, None, format!("p{producer}"));
    }

    fn on_absent_producer(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, packet: &Packet, in_face: NodeId) -> bool {
        let Packet::Interest(interest) = packet else {
            return false;
        };
        let Some(target) = self.fwd.get(&(ap, producer)).cloned() else {
            ctx.drop_packet(NodeId::Ap(ap), packet.clone(), "producer-detached");
            return true;
        };
        let now = ctx.now;
        match ctx.ap(ap).accept_interest(interest, in_face, now) {
            Accepted::Done(a) => ctx.emit(NodeId::Ap(ap), vec![a]),
            Accepted::Aggregated => {}
            Accepted::Pending(key) => {
                if let Some(target) = target {
                    Self::forward(ctx, ap, &key, &target);
                }
            }
        }
        true
    }

    fn on_reattach(&mut self, ctx: &mut Ctx, producer: u16, old_ap: u16, new_ap: u16) {
        self.fwd.remove(&(new_ap, producer));
        let tag = &ctx.topo.producers[producer as usize].tag;
        let nonce = ctx.next_nonce();
        let name = ap_prefix(old_ap).child(tag).child("mu").child(nonce.to_string());
        let body = NoticeBody::MobilityUpdate { producer: NodeId::Producer(producer), new_prefix: ap_prefix(new_ap) };
        ctx.send(NodeId::Producer(producer), NodeId::Ap(new_ap), Packet::Notice(Notice { name, nonce, body }));
    }

    fn on_notice(&mut self, ctx: &mut Ctx, ap: u16, notice: &Notice) {
        let NoticeBody::MobilityUpdate { producer: NodeId::Producer(producer), new_prefix } = &notice.body else {
            return;
        };
        let producer = *producer;
        self.fwd.insert((ap, producer), Some(new_prefix.clone()));
        ctx.note(NodeId::Ap(ap), TraceEvent::Update, Some(notice.name.clone()), Some(notice.nonce), new_prefix.to_string());
        let tag = &ctx.topo.producers[producer as usize].tag;
        let own = ap_prefix(ap).child(tag);
        for key in ctx.ap(ap).pit.names_under(&own) {
            Self::forward(ctx, ap, &key, new_prefix);
        }
    }
}

/// The old AP tells each consumer which APs surround it; consumers then send
/// a copy of every Interest to each of them until one answers.
pub struct ZoneFlooding {
    zone: ZoneShape,
}

impl ZoneFlooding {
    pub fn new(params: &StrategyParams) -> Self {
        ZoneFlooding { zone: params.zone }
    }
}

impl Strategy for ZoneFlooding {
    fn id(&self) -> StrategyId {
        StrategyId::ZoneFlooding
    }

    fn on_producer_unreachable(&mut self, ctx: &mut Ctx, ap: u16, producer: u16, _forced_nap: Option<u16>) {
        let topo = ctx.topo;
        let cells = match self.zone {
            ZoneShape::Cross => topo.cross_zone(ap),
            ZoneShape::Square => topo.square_zone(ap),
        };
        let zone: Vec<Name> = cells.into_iter().map(ap_prefix).collect();
        for consumer in topo.consumers_of(producer) {
            let nonce = ctx.next_nonce();
            let name = consumer.prefix.child("ho").child(nonce.to_string());
            ctx.note(NodeId::Ap(ap), TraceEvent::Notify, Some(name.clone()), Some(nonce), format!("c{}", consumer.id));
            let body = NoticeBody::HandoverNotice { producer: NodeId::Producer(producer), zone: zone.clone() };
            ctx.route(NodeId::Ap(ap), Packet::Notice(Notice { name, nonce, body }));
        }
    }

    fn on_absent_producer(&mut self, ctx: &mut Ctx, ap: u16, _producer: u16, packet: &Packet, _in_face: NodeId) -> bool {
        ctx.drop_packet(NodeId::Ap(ap), packet.clone(), "zone-ignore");
        true
    }
}
