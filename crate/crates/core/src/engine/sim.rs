//! The event loop. Wires forwarders, mobile producers, consumers and one
//! strategy together and records everything into a [`Trace`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::event::{EventKind, EventQueue, QueueError};
use super::rng::RngStreams;
use super::topology::{ap_prefix, build_topology, Topology, TopologyConfig, TopologyError};
use super::trace::{Trace, TraceEvent, TraceRecord};
use crate::forwarder::{Action, RouterConfig, RouterState};
use crate::mobility::{
    check_handover_trigger, complete_l2_handover, nearest_in_range, perform_l2_handover, predict_future_position,
    prediction_horizon, rss, step_in_field, update_direction, update_speed, MobileNodeState, MobilityError,
    MobilityParams, Phase, RadioParams,
};
use crate::name::Name;
use crate::node::NodeId;
use crate::packet::{Data, Interest, NoticeBody, Packet, PacketKind};
use crate::strategy::{make_strategy, producer_of, select_nap, Ctx, Effect, Strategy, StrategyId, StrategyParams};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadParams {
    /// Interests per second for each (consumer, producer) pair.
    pub rate_hz: f64,
    pub timeout_ms: f64,
    pub retransmissions: u8,
    pub payload_bytes: u32,
    pub generation_delay_ms: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams { rate_hz: 20.0, timeout_ms: 1000.0, retransmissions: 1, payload_bytes: 1024, generation_delay_ms: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForwarderParams {
    pub cs_capacity: usize,
    pub pit_lifetime_ms: f64,
    pub dead_nonce_capacity: usize,
}

impl Default for ForwarderParams {
    fn default() -> Self {
        let d = RouterConfig::default();
        ForwarderParams {
            cs_capacity: d.cs_capacity,
            pit_lifetime_ms: d.pit_lifetime.as_ms(),
            dead_nonce_capacity: d.dead_nonce_capacity,
        }
    }
}

impl From<ForwarderParams> for RouterConfig {
    fn from(p: ForwarderParams) -> Self {
        RouterConfig {
            cs_capacity: p.cs_capacity,
            pit_lifetime: SimDuration::from_ms(p.pit_lifetime_ms),
            dead_nonce_capacity: p.dead_nonce_capacity,
        }
    }
}

/// A one-off Interest from `consumer` for `producer` at an absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub consumer: u16,
    pub producer: u16,
    pub at_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub topology: TopologyConfig,
    pub mobility: MobilityParams,
    pub radio: RadioParams,
    pub strategy: StrategyParams,
    pub workload: WorkloadParams,
    pub forwarder: ForwarderParams,
    pub duration_s: f64,
    pub tick_ms: f64,
    /// When set, the new AP handed to the strategy at detach is the true one
    /// with this probability and a random other neighbor otherwise.
    pub forced_accuracy: Option<f64>,
    pub probes: Vec<ProbeSpec>,
    pub event_limit: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            topology: TopologyConfig::default(),
            mobility: MobilityParams::default(),
            radio: RadioParams::default(),
            strategy: StrategyParams::default(),
            workload: WorkloadParams::default(),
            forwarder: ForwarderParams::default(),
            duration_s: 30.0,
            tick_ms: 100.0,
            forced_accuracy: None,
            probes: Vec::new(),
            event_limit: 2_000_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.tick_ms > 0.0) {
            return bad(format!("tick_ms must be positive, got {}", self.tick_ms));
        }
        let epoch_us = SimDuration::from_ms(self.mobility.epoch_s * 1000.0).0;
        let tick_us = SimDuration::from_ms(self.tick_ms).0;
        if epoch_us == 0 || !epoch_us.is_multiple_of(tick_us) {
            return bad(format!("mobility epoch {} s is not a multiple of the {} ms tick", self.mobility.epoch_s, self.tick_ms));
        }
        if !(0.0..=1.0).contains(&self.mobility.p_s) {
            return bad(format!("p_s must lie in [0, 1], got {}", self.mobility.p_s));
        }
        if !(self.mobility.l2_delay_ms >= 0.0) {
            return bad(format!("l2_delay_ms must be non-negative, got {}", self.mobility.l2_delay_ms));
        }
        if !(self.workload.rate_hz > 0.0) || !(self.workload.timeout_ms > 0.0) {
            return bad("workload rate_hz and timeout_ms must be positive".into());
        }
        if let Some(q) = self.forced_accuracy {
            if !(0.0..=1.0).contains(&q) {
                return bad(format!("forced_accuracy must lie in [0, 1], got {q}"));
            }
        }
        for p in &self.probes {
            let known = self
                .topology
                .consumers
                .get(p.consumer as usize)
                .is_some_and(|c| c.producers.contains(&p.producer));
            if !known {
                return bad(format!("probe: consumer {} does not request producer {}", p.consumer, p.producer));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
}

struct ProducerRt {
    state: MobileNodeState,
    tag: String,
    /// Bumped on every detach; packets in flight on the old link carry the old value.
    link_epoch: u64,
    last_ap: Option<u16>,
    prev_rss: Option<f64>,
    pending_target: Option<u16>,
    awaiting_attach: bool,
}

struct PairRt {
    producer: u16,
    tag: String,
    /// Prefix the consumer currently addresses the producer by.
    prefix: Name,
    next_seq: u64,
    /// seq -> attempt number.
    outstanding: BTreeMap<u64, u8>,
    zone: Option<Vec<Name>>,
}

pub struct Simulation {
    cfg: SimConfig,
    topo: Topology,
    queue: EventQueue,
    routers: BTreeMap<NodeId, RouterState>,
    strategy: Box<dyn Strategy>,
    rng: RngStreams,
    trace: Trace,
    producers: Vec<ProducerRt>,
    consumers: Vec<Vec<PairRt>>,
    attached: Vec<Option<u16>>,
    nonces: u64,
    end: SimTime,
    tick: SimDuration,
}

/// Runs one replicate to completion.
pub fn run(cfg: &SimConfig, strategy: StrategyId, seed: u64) -> Result<Trace, SimError> {
    let mut sim = Simulation::new(cfg, strategy, seed)?;
    sim.run_to_end()?;
    Ok(sim.into_trace())
}

impl Simulation {
    pub fn new(cfg: &SimConfig, strategy: StrategyId, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let topo = build_topology(&cfg.topology)?;
        let rc: RouterConfig = cfg.forwarder.into();
        let mut routers = BTreeMap::new();
        for node in topo.routers() {
            let mut r = RouterState::new(node, rc);
            for &n in topo.router_neighbors(node) {
                r.add_face(n);
            }
            for ap in &topo.aps {
                if node != NodeId::Ap(ap.id) {
                    if let Some(nh) = topo.next_hop(node, ap.id) {
                        r.add_route(&ap.prefix, nh);
                    }
                }
            }
            routers.insert(node, r);
        }
        for c in &topo.consumers {
            let r = routers.get_mut(&NodeId::Ap(c.ap)).expect("consumer AP exists");
            r.add_face(NodeId::Consumer(c.id));
            r.add_route(&c.prefix, NodeId::Consumer(c.id));
        }

        let strategy = make_strategy(strategy, &cfg.strategy, &topo, cfg.mobility.l2_delay_ms);
        let producers = topo
            .producers
            .iter()
            .map(|p| ProducerRt {
                state: MobileNodeState::new(p.start, p.speed_kmh, p.heading, Some(p.home_ap)),
                tag: p.tag.clone(),
                link_epoch: 0,
                last_ap: None,
                prev_rss: None,
                pending_target: None,
                awaiting_attach: false,
            })
            .collect();
        let consumers = topo
            .consumers
            .iter()
            .map(|c| {
                c.producers
                    .iter()
                    .map(|&p| {
                        let info = &topo.producers[p as usize];
                        PairRt {
                            producer: p,
                            tag: info.tag.clone(),
                            prefix: ap_prefix(info.home_ap).child(&info.tag),
                            next_seq: 0,
                            outstanding: BTreeMap::new(),
                            zone: None,
                        }
                    })
                    .collect()
            })
            .collect();

        let mut sim = Simulation {
            cfg: cfg.clone(),
            attached: vec![None; topo.producers.len()],
            topo,
            queue: EventQueue::new(cfg.event_limit),
            routers,
            strategy,
            rng: RngStreams::new(seed),
            trace: Trace::new(),
            producers,
            consumers,
            nonces: 0,
            end: SimTime::from_ms(cfg.duration_s * 1000.0),
            tick: SimDuration::from_ms(cfg.tick_ms),
        };
        for p in 0..sim.producers.len() {
            let home = sim.topo.producers[p].home_ap;
            sim.connect(p as u16, home);
            sim.row(TraceEvent::Attach, NodeId::Producer(p as u16), None, None, Some(NodeId::Ap(home)), "initial");
        }
        sim.queue.push(SimTime::ZERO + sim.tick, EventKind::MobilityTick)?;
        let gap = SimDuration::from_ms(1000.0 / cfg.workload.rate_hz);
        for c in 0..sim.consumers.len() {
            for pair in 0..sim.consumers[c].len() {
                let phase = SimDuration((sim.rng.workload.random::<f64>() * gap.0 as f64) as u64);
                sim.queue.push(SimTime::ZERO + phase, EventKind::ConsumerSend { consumer: c as u16, pair })?;
            }
        }
        for probe in &cfg.probes {
            let pair = sim.consumers[probe.consumer as usize]
                .iter()
                .position(|pr| pr.producer == probe.producer)
                .expect("validated");
            sim.queue.push(SimTime::from_ms(probe.at_ms), EventKind::Probe { consumer: probe.consumer, pair })?;
        }
        Ok(sim)
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn router(&self, node: NodeId) -> Option<&RouterState> {
        self.routers.get(&node)
    }

    pub fn producer_state(&self, producer: u16) -> &MobileNodeState {
        &self.producers[producer as usize].state
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// Processes events up to and including `until`.
    pub fn run_until(&mut self, until: SimTime) -> Result<(), SimError> {
        let stop = until.min(self.end);
        while self.queue.peek_time().is_some_and(|t| t <= stop) {
            let ev = self.queue.pop().expect("peeked");
            self.handle(ev.kind)?;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        self.run_until(self.end)
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::Arrival { to, from, packet, link_epoch } => self.arrive(to, from, packet, link_epoch),
            EventKind::MobilityTick => self.mobility_tick(),
            EventKind::Attach { producer } => {
                self.producers[producer as usize].awaiting_attach = false;
                self.try_attach(producer)
            }
            EventKind::ConsumerSend { consumer, pair } => {
                let seq = self.next_seq(consumer, pair);
                self.send_interest(consumer, pair, seq, 0, false)?;
                let next = self.now() + SimDuration::from_ms(1000.0 / self.cfg.workload.rate_hz);
                if next <= self.end {
                    self.queue.push(next, EventKind::ConsumerSend { consumer, pair })?;
                }
                Ok(())
            }
            EventKind::Probe { consumer, pair } => {
                let seq = self.next_seq(consumer, pair);
                self.send_interest(consumer, pair, seq, 0, true)
            }
            EventKind::ConsumerTimeout { consumer, pair, seq, attempt } => self.timeout(consumer, pair, seq, attempt),
            EventKind::ProducerReply { producer, data, epoch } => self.reply(producer, data, epoch),
            EventKind::Timer { node, timer } => self.with_strategy(|s, ctx| s.on_timer(ctx, node, timer)),
        }
    }

    // ---- trace and transmission ----

    fn row(
        &mut self,
        event: TraceEvent,
        node: NodeId,
        packet: Option<&Packet>,
        from: Option<NodeId>,
        to: Option<NodeId>,
        cause: impl Into<String>,
    ) {
        let mut r = TraceRecord::new(self.now(), event, node);
        if let Some(p) = packet {
            r.kind = Some(p.kind());
            r.name = Some(p.name().clone());
            r.nonce = p.nonce();
        }
        r.hop_from = from;
        r.hop_to = to;
        r.cause = cause.into();
        self.trace.push(r);
    }

    fn drop_row(&mut self, at: NodeId, kind: PacketKind, name: Name, nonce: Option<u64>, cause: impl Into<String>) {
        let mut r = TraceRecord::new(self.now(), TraceEvent::Drop, at);
        r.kind = Some(kind);
        r.name = Some(name);
        r.nonce = nonce;
        r.cause = cause.into();
        self.trace.push(r);
    }

    fn transmit(&mut self, from: NodeId, to: NodeId, packet: Packet, cause: &str) -> Result<(), SimError> {
        let (delay, link_epoch) = match (from, to) {
            (NodeId::Producer(p), NodeId::Ap(a)) | (NodeId::Ap(a), NodeId::Producer(p)) => {
                if self.attached[p as usize] != Some(a) {
                    self.drop_row(from, packet.kind(), packet.name().clone(), packet.nonce(), "link-down");
                    return Ok(());
                }
                (self.topo.wireless_link().delay, Some(self.producers[p as usize].link_epoch))
            }
            _ => match self.topo.wired_link(from, to) {
                Some(l) => (l.delay, None),
                None => {
                    self.drop_row(from, packet.kind(), packet.name().clone(), packet.nonce(), "no-link");
                    return Ok(());
                }
            },
        };
        self.row(TraceEvent::Send, from, Some(&packet), Some(from), Some(to), cause);
        self.queue.push(self.now() + delay, EventKind::Arrival { to, from, packet, link_epoch })?;
        Ok(())
    }

    fn emit(&mut self, at: NodeId, actions: Vec<Action>) -> Result<(), SimError> {
        for a in actions {
            match a {
                Action::Send { face, packet } => self.transmit(at, face, packet, "")?,
                Action::Drop { kind, name, nonce, cause } => self.drop_row(at, kind, name, nonce, cause.as_str()),
            }
        }
        Ok(())
    }

    fn with_strategy<R>(&mut self, f: impl FnOnce(&mut dyn Strategy, &mut Ctx) -> R) -> Result<R, SimError> {
        let now = self.now();
        let mut ctx = Ctx::new(
            now,
            &self.topo,
            &mut self.routers,
            &self.attached,
            self.cfg.mobility.l2_delay_ms,
            &mut self.nonces,
        );
        let out = f(self.strategy.as_mut(), &mut ctx);
        for e in ctx.into_effects() {
            match e {
                Effect::Send { from, to, packet } => self.transmit(from, to, packet, "")?,
                Effect::Drop { at, kind, name, nonce, cause } => self.drop_row(at, kind, name, nonce, cause),
                Effect::Timer { node, at, timer } => self.queue.push(at, EventKind::Timer { node, timer })?,
                Effect::Note { node, event, name, nonce, cause } => {
                    let mut r = TraceRecord::new(now, event, node);
                    r.name = name;
                    r.nonce = nonce;
                    r.cause = cause;
                    self.trace.push(r);
                }
            }
        }
        Ok(out)
    }

    fn next_nonce(&mut self) -> u64 {
        self.nonces += 1;
        self.nonces
    }

    // ---- arrivals ----

    fn arrive(&mut self, to: NodeId, from: NodeId, packet: Packet, link_epoch: Option<u64>) -> Result<(), SimError> {
        if let Some(epoch) = link_epoch {
            let p = match (from, to) {
                (NodeId::Producer(p), _) | (_, NodeId::Producer(p)) => p,
                _ => unreachable!("wireless hop without a producer"),
            };
            if self.producers[p as usize].link_epoch != epoch {
                self.drop_row(to, packet.kind(), packet.name().clone(), packet.nonce(), "link-down");
                return Ok(());
            }
        }
        self.row(TraceEvent::Recv, to, Some(&packet), Some(from), Some(to), "");
        match to {
            NodeId::Consumer(c) => self.at_consumer(c, packet),
            NodeId::Producer(p) => self.at_producer(p, packet),
            _ => self.at_router(to, from, packet),
        }
    }

    /// `(ap, producer)` when `node` is an AP receiving traffic for a producer
    /// that is not attached to it but belongs there: the name is under the
    /// AP's own prefix, or (with `or_last`) the AP is where the producer left from.
    fn absent_producer(&self, node: NodeId, name: &Name, or_last: bool) -> Option<(u16, u16)> {
        let NodeId::Ap(ap) = node else {
            return None;
        };
        let p = producer_of(&self.topo, name)?;
        if self.attached[p as usize] == Some(ap) {
            return None;
        }
        let own = ap_prefix(ap).is_prefix_of(name);
        (own || (or_last && self.producers[p as usize].last_ap == Some(ap))).then_some((ap, p))
    }

    fn at_router(&mut self, node: NodeId, from: NodeId, packet: Packet) -> Result<(), SimError> {
        let now = self.now();
        match &packet {
            Packet::Interest(_) | Packet::InterestRed(_) => {
                if let Some((ap, p)) = self.absent_producer(node, packet.name(), true) {
                    if self.with_strategy(|s, ctx| s.on_absent_producer(ctx, ap, p, &packet, from))? {
                        return Ok(());
                    }
                }
                let r = self.routers.get_mut(&node).expect("router");
                let actions = match &packet {
                    Packet::Interest(i) => r.process_interest(i, from, now),
                    Packet::InterestRed(red) => r.process_interest_red(red, Some(from), now),
                    _ => unreachable!(),
                };
                self.emit(node, actions)
            }
            Packet::Data(d) => {
                let actions = self.routers.get_mut(&node).expect("router").process_data(d, from, now);
                self.emit(node, actions)
            }
            Packet::InterestPu(pu) => match node {
                NodeId::Ap(ap) => self.with_strategy(|s, ctx| s.on_interest_pu(ctx, ap, pu)),
                _ => {
                    self.drop_row(node, packet.kind(), pu.name.clone(), Some(pu.nonce), "unexpected");
                    Ok(())
                }
            },
            Packet::PrefixAnnouncement(ann) => {
                let fresh = self.routers.get_mut(&node).expect("router").note_nonce(&ann.announced_prefix, ann.nonce);
                if !fresh {
                    self.drop_row(node, packet.kind(), ann.announced_prefix.clone(), Some(ann.nonce), "duplicate-nonce");
                    return Ok(());
                }
                self.with_strategy(|s, ctx| s.on_prefix_announcement(ctx, node, ann))?;
                let next: Vec<NodeId> = self.topo.router_neighbors(node).iter().copied().filter(|&n| n != from).collect();
                for n in next {
                    self.transmit(node, n, packet.clone(), "")?;
                }
                Ok(())
            }
            Packet::Notice(notice) => {
                if let Some((ap, _)) = self.absent_producer(node, &notice.name, false) {
                    return self.with_strategy(|s, ctx| s.on_notice(ctx, ap, notice));
                }
                match self.routers[&node].fib.longest_prefix_match(&notice.name) {
                    Some(face) => self.transmit(node, face, packet.clone(), ""),
                    None => {
                        self.drop_row(node, packet.kind(), notice.name.clone(), Some(notice.nonce), "no-route");
                        Ok(())
                    }
                }
            }
        }
    }

    fn at_consumer(&mut self, c: u16, packet: Packet) -> Result<(), SimError> {
        let node = NodeId::Consumer(c);
        match packet {
            Packet::Data(d) => {
                let n = d.name.len();
                let tag = d.name.component(n.saturating_sub(2)).unwrap_or_default().to_string();
                let seq: Option<u64> = d.name.last().parse().ok();
                let pair = self.consumers[c as usize].iter().position(|p| p.tag == tag);
                let hit = match (pair, seq) {
                    (Some(i), Some(s)) => self.consumers[c as usize][i].outstanding.remove(&s).map(|_| i),
                    _ => None,
                };
                let Some(i) = hit else {
                    self.drop_row(node, PacketKind::Data, d.name, None, "unsolicited-data");
                    return Ok(());
                };
                let pr = &mut self.consumers[c as usize][i];
                if pr.zone.take().is_some() {
                    if let Some(prefix) = d.name.prefix(n - 1) {
                        pr.prefix = prefix;
                    }
                }
                let path: Vec<String> = d.path.iter().map(NodeId::to_string).collect();
                let from = d.path.last().copied();
                self.row(TraceEvent::Satisfy, node, Some(&Packet::Data(d.clone())), from, Some(node), format!("path={}", path.join(">")));
                Ok(())
            }
            Packet::Notice(notice) => {
                if let NoticeBody::HandoverNotice { producer: NodeId::Producer(p), zone } = notice.body {
                    for pr in self.consumers[c as usize].iter_mut().filter(|pr| pr.producer == p) {
                        pr.zone = Some(zone.clone());
                    }
                }
                Ok(())
            }
            other => {
                self.drop_row(node, other.kind(), other.name().clone(), other.nonce(), "unexpected");
                Ok(())
            }
        }
    }

    fn at_producer(&mut self, p: u16, packet: Packet) -> Result<(), SimError> {
        if !packet.kind().is_interest_like() {
            self.drop_row(NodeId::Producer(p), packet.kind(), packet.name().clone(), packet.nonce(), "unexpected");
            return Ok(());
        }
        self.with_strategy(|s, ctx| s.on_producer_receive(ctx, p))?;
        let data = Data {
            name: packet.name().clone(),
            payload_size: self.cfg.workload.payload_bytes,
            path: vec![NodeId::Producer(p)],
        };
        let epoch = self.producers[p as usize].link_epoch;
        if self.cfg.workload.generation_delay_ms > 0.0 {
            let at = self.now() + SimDuration::from_ms(self.cfg.workload.generation_delay_ms);
            self.queue.push(at, EventKind::ProducerReply { producer: p, data, epoch })?;
            Ok(())
        } else {
            self.reply(p, data, epoch)
        }
    }

    fn reply(&mut self, p: u16, data: Data, epoch: u64) -> Result<(), SimError> {
        match self.attached[p as usize] {
            Some(ap) if self.producers[p as usize].link_epoch == epoch => {
                self.transmit(NodeId::Producer(p), NodeId::Ap(ap), Packet::Data(data), "")
            }
            _ => {
                self.drop_row(NodeId::Producer(p), PacketKind::Data, data.name, None, "link-down");
                Ok(())
            }
        }
    }

    // ---- consumers ----

    fn next_seq(&mut self, c: u16, pair: usize) -> u64 {
        let pr = &mut self.consumers[c as usize][pair];
        pr.next_seq += 1;
        pr.next_seq
    }

    fn send_interest(&mut self, c: u16, pair: usize, seq: u64, attempt: u8, probe: bool) -> Result<(), SimError> {
        let nonce = self.next_nonce();
        let pr = &mut self.consumers[c as usize][pair];
        pr.outstanding.insert(seq, attempt);
        let seq_s = seq.to_string();
        let (names, cause) = match &pr.zone {
            Some(zone) => (
                zone.iter().map(|z| z.child(&pr.tag).child(&seq_s)).collect::<Vec<_>>(),
                format!("flood/{}", zone.len()),
            ),
            None => (vec![pr.prefix.child(&seq_s)], String::new()),
        };
        let node = NodeId::Consumer(c);
        let ap = NodeId::Ap(self.topo.consumers[c as usize].ap);
        let event = if attempt == 0 { TraceEvent::Originate } else { TraceEvent::Retransmit };
        let first = Packet::Interest(Interest { name: names[0].clone(), nonce });
        let row_cause = if probe { "probe".to_string() } else { cause.clone() };
        self.row(event, node, Some(&first), Some(node), Some(ap), row_cause);
        for name in names {
            self.transmit(node, ap, Packet::Interest(Interest { name, nonce }), &cause)?;
        }
        let at = self.now() + SimDuration::from_ms(self.cfg.workload.timeout_ms);
        self.queue.push(at, EventKind::ConsumerTimeout { consumer: c, pair, seq, attempt })?;
        Ok(())
    }

    fn timeout(&mut self, c: u16, pair: usize, seq: u64, attempt: u8) -> Result<(), SimError> {
        let pr = &mut self.consumers[c as usize][pair];
        if pr.outstanding.get(&seq) != Some(&attempt) {
            return Ok(());
        }
        if attempt < self.cfg.workload.retransmissions {
            return self.send_interest(c, pair, seq, attempt + 1, false);
        }
        pr.outstanding.remove(&seq);
        let name = pr.prefix.child(seq.to_string());
        let mut r = TraceRecord::new(self.now(), TraceEvent::GiveUp, NodeId::Consumer(c));
        r.kind = Some(PacketKind::Interest);
        r.name = Some(name);
        self.trace.push(r);
        Ok(())
    }

    // ---- mobility ----

    fn mobility_tick(&mut self) -> Result<(), SimError> {
        let now = self.now();
        let dt = self.tick.as_secs();
        let epoch_us = SimDuration::from_ms(self.cfg.mobility.epoch_s * 1000.0).0;
        let resample = (now.0 - self.tick.0).is_multiple_of(epoch_us);
        let m = self.cfg.mobility;
        for p in 0..self.producers.len() {
            if resample {
                let u_dv: f64 = self.rng.mobility.random();
                let u_p: f64 = self.rng.mobility.random();
                let u_phi: f64 = self.rng.mobility.random();
                let dv = m.dv_kmh.0 + (m.dv_kmh.1 - m.dv_kmh.0) * u_dv;
                let dphi = m.dphi_rad.0 + (m.dphi_rad.1 - m.dphi_rad.0) * u_phi;
                let st = &mut self.producers[p].state;
                st.speed_kmh = update_speed(st.speed_kmh, dv, u_p, &m);
                st.heading = update_direction(st.heading, dphi);
            }
            let st = &mut self.producers[p].state;
            let (pos, heading) = step_in_field(st.position, st.speed_kmh, st.heading, dt, &self.topo.field);
            st.position = pos;
            st.heading = heading;
            self.phase_step(p as u16, dt)?;
        }
        let next = now + self.tick;
        if next <= self.end {
            self.queue.push(next, EventKind::MobilityTick)?;
        }
        Ok(())
    }

    fn phase_step(&mut self, p: u16, dt: f64) -> Result<(), SimError> {
        let now = self.now();
        let m = self.cfg.mobility;
        let radio = self.cfg.radio;
        let pr = &mut self.producers[p as usize];
        match pr.state.phase {
            Phase::Reattached { .. } => pr.state.settle()?,
            Phase::Connected => {
                let ap = pr.state.attached_ap.expect("connected producers are attached");
                let rss_s = rss(&self.topo.aps[ap as usize], pr.state.position, &radio);
                let prev = pr.prev_rss.replace(rss_s);
                if check_handover_trigger(rss_s, &m) {
                    let decay = prev.map(|r| (r - rss_s) / dt).unwrap_or(0.0);
                    let t_f = prediction_horizon(rss_s, decay, &m, &radio);
                    let predicted = predict_future_position(&pr.state, t_f, Some(&self.topo.field));
                    pr.state.begin_predicting(now)?;
                    let cause = format!("rss={rss_s:.2} t_f={t_f:.2} at={predicted}");
                    self.row(TraceEvent::Trigger, NodeId::Producer(p), None, Some(NodeId::Ap(ap)), None, cause);
                    self.with_strategy(|s, ctx| s.on_rss_trigger(ctx, p, Some(ap), predicted))?;
                }
            }
            Phase::Predicting { since } => {
                let ap = pr.state.attached_ap.expect("predicting producers are attached");
                let pos = pr.state.position;
                let rss_s = rss(&self.topo.aps[ap as usize], pos, &radio);
                pr.prev_rss = Some(rss_s);
                let best = self
                    .topo
                    .aps
                    .iter()
                    .filter(|a| a.id != ap)
                    .map(|a| rss(a, pos, &radio))
                    .fold(f64::NEG_INFINITY, f64::max);
                if since < now && best > rss_s + radio.hysteresis_db {
                    self.detach(p)?;
                } else if rss_s > m.rss_threshold_dbm + radio.hysteresis_db {
                    // Wandered back toward the serving AP.
                    pr.state.phase = Phase::Connected;
                }
            }
            Phase::L2Handover { .. } => {
                if !pr.awaiting_attach {
                    self.try_attach(p)?;
                }
            }
        }
        Ok(())
    }

    fn connect(&mut self, p: u16, ap: u16) {
        self.attached[p as usize] = Some(ap);
        let prefix = ap_prefix(ap).child(&self.producers[p as usize].tag);
        let r = self.routers.get_mut(&NodeId::Ap(ap)).expect("AP router");
        r.add_face(NodeId::Producer(p));
        r.add_route(&prefix, NodeId::Producer(p));
    }

    fn detach(&mut self, p: u16) -> Result<(), SimError> {
        let now = self.now();
        let pr = &mut self.producers[p as usize];
        let oap = pr.state.attached_ap.expect("detaching producers are attached");
        let ready = perform_l2_handover(&mut pr.state, now, &self.cfg.mobility)?;
        pr.link_epoch += 1;
        pr.last_ap = Some(oap);
        pr.prev_rss = None;
        pr.awaiting_attach = true;
        let pos = pr.state.position;
        self.attached[p as usize] = None;
        self.routers.get_mut(&NodeId::Ap(oap)).expect("AP router").remove_face(NodeId::Producer(p));

        let mut cause = String::new();
        let forced = match self.cfg.forced_accuracy {
            Some(q) => {
                let actual = select_nap(&self.topo.aps, pos, Some(oap)).expect("grid has more than one AP");
                let u_hit: f64 = self.rng.accuracy.random();
                let u_pick: f64 = self.rng.accuracy.random();
                let others: Vec<u16> = self.topo.neighbors4(oap).into_iter().filter(|&a| a != actual).collect();
                let predicted = if u_hit < q || others.is_empty() {
                    actual
                } else {
                    others[((u_pick * others.len() as f64) as usize).min(others.len() - 1)]
                };
                self.producers[p as usize].pending_target = Some(actual);
                cause = format!("forced actual=ap{actual} predicted=ap{predicted}");
                Some(predicted)
            }
            None => None,
        };
        self.row(TraceEvent::Detach, NodeId::Producer(p), None, Some(NodeId::Ap(oap)), None, cause);
        self.with_strategy(|s, ctx| s.on_producer_unreachable(ctx, oap, p, forced))?;
        self.queue.push(ready, EventKind::Attach { producer: p })?;
        Ok(())
    }

    fn try_attach(&mut self, p: u16) -> Result<(), SimError> {
        let now = self.now();
        let radio = self.cfg.radio;
        let pr = &mut self.producers[p as usize];
        let last = pr.last_ap;
        let target = pr
            .pending_target
            .take()
            .or_else(|| nearest_in_range(&self.topo.aps, pr.state.position, last, &radio));
        if !complete_l2_handover(&mut pr.state, target, now)? {
            self.row(TraceEvent::Disconnect, NodeId::Producer(p), None, last.map(NodeId::Ap), None, "no-ap-in-range");
            return Ok(());
        }
        let ap = target.expect("attached");
        self.connect(p, ap);
        self.row(TraceEvent::Attach, NodeId::Producer(p), None, None, Some(NodeId::Ap(ap)), "");
        let old = last.unwrap_or(ap);
        self.with_strategy(|s, ctx| s.on_reattach(ctx, p, old, ap))
    }
}
