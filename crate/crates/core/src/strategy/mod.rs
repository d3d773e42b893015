//! Mobility-management strategies. The engine calls the hooks of one
//! [`Strategy`] as handovers unfold; hooks act through a [`Ctx`], which
//! collects packets to send, timers and trace notes.

mod baselines;
mod proposed;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baselines::{InterestForwarding, NoManagement, ZoneFlooding};
pub use proposed::{LocationPrediction, NapBuffer, OapRedirectState};

use crate::engine::topology::Topology;
use crate::engine::trace::TraceEvent;
use crate::forwarder::{Action, RouterState};
use crate::mobility::{AccessPoint, Point};
use crate::name::Name;
use crate::node::NodeId;
use crate::packet::{InterestPu, Notice, Packet, PacketKind, PrefixAnnouncement};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    Proposed,
    NoManagement,
    InterestForwarding,
    ZoneFlooding,
}

impl StrategyId {
    pub const ALL: [StrategyId; 4] = [
        StrategyId::Proposed,
        StrategyId::NoManagement,
        StrategyId::InterestForwarding,
        StrategyId::ZoneFlooding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Proposed => "proposed",
            StrategyId::NoManagement => "no_management",
            StrategyId::InterestForwarding => "interest_forwarding",
            StrategyId::ZoneFlooding => "zone_flooding",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown strategy `{0}` (expected proposed, no_management, interest_forwarding or zone_flooding)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyId {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "proposed" | "lp" | "location_prediction" => StrategyId::Proposed,
            "no_management" | "nm" | "none" => StrategyId::NoManagement,
            "interest_forwarding" | "if" => StrategyId::InterestForwarding,
            "zone_flooding" | "zf" => StrategyId::ZoneFlooding,
            _ => return Err(UnknownStrategy(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneShape {
    /// The cell and its edge neighbors.
    Cross,
    /// The cell and all eight surrounding cells.
    Square,
}

/// Knobs for all strategies; each reads only its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    /// oAP hold time for stored Interest copies. Derived from the other
    /// knobs when unset; see [`StrategyParams::store_time`].
    pub t_s_ms: Option<f64>,
    /// Silence after reattachment before the producer announces its prefix.
    pub grace_ms: Option<f64>,
    /// How long nAP holds redirected Interests; defaults to `t_s`.
    pub nap_max_wait_ms: Option<f64>,
    /// Round trip used to size `t_s` when it is not given.
    pub nominal_rtt_ms: f64,
    pub convergence_ms: f64,
    pub zone: ZoneShape,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            t_s_ms: None,
            grace_ms: None,
            nap_max_wait_ms: None,
            nominal_rtt_ms: 50.0,
            convergence_ms: 1100.0,
            zone: ZoneShape::Cross,
        }
    }
}

impl StrategyParams {
    pub fn grace(&self, l2_ms: f64) -> SimDuration {
        SimDuration::from_ms(self.grace_ms.unwrap_or(l2_ms))
    }

    /// Long enough for a misprediction announcement to reach oAP: the layer-2
    /// gap, the grace window, then twice the nominal round trip.
    pub fn store_time(&self, l2_ms: f64) -> SimDuration {
        let grace = self.grace_ms.unwrap_or(l2_ms);
        SimDuration::from_ms(self.t_s_ms.unwrap_or(l2_ms + grace + 2.0 * self.nominal_rtt_ms))
    }

    pub fn nap_max_wait(&self, l2_ms: f64) -> SimDuration {
        self.nap_max_wait_ms.map(SimDuration::from_ms).unwrap_or_else(|| self.store_time(l2_ms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimerId {
    /// Discard oAP copies stored for this producer whose hold time is over.
    StoreExpiry { producer: u16 },
    NapExpiry { producer: u16 },
    Grace { producer: u16, epoch: u64 },
    Convergence { producer: u16, epoch: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Send { from: NodeId, to: NodeId, packet: Packet },
    Drop { at: NodeId, kind: PacketKind, name: Name, nonce: Option<u64>, cause: String },
    Timer { node: NodeId, at: SimTime, timer: TimerId },
    Note { node: NodeId, event: TraceEvent, name: Option<Name>, nonce: Option<u64>, cause: String },
}

/// What a hook may see and do. Router state is shared with the engine;
/// everything else is queued as [`Effect`]s and applied after the hook returns.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub topo: &'a Topology,
    pub routers: &'a mut BTreeMap<NodeId, RouterState>,
    /// Current AP of each producer.
    pub attached: &'a [Option<u16>],
    pub l2_ms: f64,
    nonces: &'a mut u64,
    effects: Vec<Effect>,
}

impl<'a> Ctx<'a> {
    pub fn new(
        now: SimTime,
        topo: &'a Topology,
        routers: &'a mut BTreeMap<NodeId, RouterState>,
        attached: &'a [Option<u16>],
        l2_ms: f64,
        nonces: &'a mut u64,
    ) -> Self {
        Ctx { now, topo, routers, attached, l2_ms, nonces, effects: Vec::new() }
    }

    pub fn router(&mut self, node: NodeId) -> &mut RouterState {
        self.routers.get_mut(&node).unwrap_or_else(|| panic!("no router {node}"))
    }

    pub fn ap(&mut self, ap: u16) -> &mut RouterState {
        self.router(NodeId::Ap(ap))
    }

    pub fn next_nonce(&mut self) -> u64 {
        *self.nonces += 1;
        *self.nonces
    }

    /// Queues router output produced at `at`.
    pub fn emit(&mut self, at: NodeId, actions: Vec<Action>) {
        for a in actions {
            match a {
                Action::Send { face, packet } => self.effects.push(Effect::Send { from: at, to: face, packet }),
                Action::Drop { kind, name, nonce, cause } => self.effects.push(Effect::Drop {
                    at,
                    kind,
                    name,
                    nonce,
                    cause: cause.as_str().to_string(),
                }),
            }
        }
    }

    pub fn send(&mut self, from: NodeId, to: NodeId, packet: Packet) {
        self.effects.push(Effect::Send { from, to, packet });
    }

    /// Forwards a packet from `at` by longest-prefix match without PIT state.
    pub fn route(&mut self, at: NodeId, packet: Packet) {
        match self.router(at).fib.longest_prefix_match(packet.name()) {
            Some(face) => self.send(at, face, packet),
            None => self.drop_packet(at, packet, "no-route"),
        }
    }

    pub fn drop_packet(&mut self, at: NodeId, packet: Packet, cause: impl Into<String>) {
        self.effects.push(Effect::Drop {
            at,
            kind: packet.kind(),
            name: packet.name().clone(),
            nonce: packet.nonce(),
            cause: cause.into(),
        });
    }

    pub fn drop_name(&mut self, at: NodeId, kind: PacketKind, name: &Name, nonce: Option<u64>, cause: impl Into<String>) {
        self.effects.push(Effect::Drop { at, kind, name: name.clone(), nonce, cause: cause.into() });
    }

    pub fn timer(&mut self, node: NodeId, delay: SimDuration, timer: TimerId) {
        self.effects.push(Effect::Timer { node, at: self.now + delay, timer });
    }

    pub fn note(&mut self, node: NodeId, event: TraceEvent, name: Option<Name>, nonce: Option<u64>, cause: impl Into<String>) {
        self.effects.push(Effect::Note { node, event, name, nonce, cause: cause.into() });
    }

    pub fn into_effects(self) -> Vec<Effect> {
        self.effects
    }
}

/// Engine callbacks. Defaults do nothing.
pub trait Strategy: Send {
    fn id(&self) -> StrategyId;

    /// The producer's serving signal just crossed the threshold; `predicted`
    /// is its dead-reckoned position at the prediction horizon.
    fn on_rss_trigger(&mut self, _ctx: &mut Ctx, _producer: u16, _oap: Option<u16>, _predicted: Point) {}

    fn on_interest_pu(&mut self, _ctx: &mut Ctx, _ap: u16, _pu: &InterestPu) {}

    /// The producer's link to `ap` just broke. In forced-accuracy runs
    /// `forced_nap` replaces whatever `ap` predicted.
    fn on_producer_unreachable(&mut self, _ctx: &mut Ctx, _ap: u16, _producer: u16, _forced_nap: Option<u16>) {}

    /// An Interest-family packet reached `ap` for a producer it does not serve
    /// right now. Returns false to fall through to plain forwarding.
    fn on_absent_producer(&mut self, _ctx: &mut Ctx, _ap: u16, _producer: u16, _packet: &Packet, _in_face: NodeId) -> bool {
        false
    }

    /// Runs at every router the announcement floods through.
    fn on_prefix_announcement(&mut self, _ctx: &mut Ctx, _node: NodeId, _ann: &PrefixAnnouncement) {}

    /// A notice addressed under `ap`'s own prefix for a producer it no longer serves.
    fn on_notice(&mut self, _ctx: &mut Ctx, _ap: u16, _notice: &Notice) {}

    fn on_reattach(&mut self, _ctx: &mut Ctx, _producer: u16, _old_ap: u16, _new_ap: u16) {}

    /// The producer received an Interest-family packet.
    fn on_producer_receive(&mut self, _ctx: &mut Ctx, _producer: u16) {}

    fn on_timer(&mut self, _ctx: &mut Ctx, _node: NodeId, _timer: TimerId) {}
}

pub fn make_strategy(id: StrategyId, params: &StrategyParams, topo: &Topology, l2_ms: f64) -> Box<dyn Strategy> {
    match id {
        StrategyId::Proposed => Box::new(LocationPrediction::new(params, topo, l2_ms)),
        StrategyId::NoManagement => Box::new(NoManagement::new(params, topo)),
        StrategyId::InterestForwarding => Box::new(InterestForwarding::new()),
        StrategyId::ZoneFlooding => Box::new(ZoneFlooding::new(params)),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no access point left to choose from")]
pub struct NoCandidate;

/// Closest AP to `coords`, never `exclude`. Ties go to the lowest id.
pub fn select_nap(aps: &[AccessPoint], coords: Point, exclude: Option<u16>) -> Result<u16, NoCandidate> {
    aps.iter()
        .filter(|a| Some(a.id) != exclude)
        .map(|a| (a.position.distance(coords), a.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(NoCandidate)
}

/// Producer index named by the component after the AP in `/net/apK/pJ/...`.
pub(crate) fn producer_of(topo: &Topology, name: &Name) -> Option<u16> {
    topo.producer_by_tag(name.component(2)?)
}
