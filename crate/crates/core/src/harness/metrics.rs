//! Everything reported about a run is computed from its trace alone, so a
//! saved `trace.csv` reproduces `metrics.json` exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::trace::{Trace, TraceEvent, TraceRecord};
use crate::node::NodeId;
use crate::packet::PacketKind;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Stats {
        if xs.is_empty() {
            return Stats::default();
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Stats {
            n,
            mean,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

/// One detach of one producer and what followed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handover {
    pub producer: u16,
    pub oap: u16,
    pub detach_ms: f64,
    pub nap: Option<u16>,
    pub attach_ms: Option<f64>,
    /// AP the old AP was told to expect, if any.
    pub predicted: Option<u16>,
    /// Detach to the first Interest-family packet the producer receives
    /// before its next detach. `None` is a dropped session unless censored.
    pub latency_ms: Option<f64>,
    /// No receipt, and the trace ends within [`CENSOR_MS`] of the detach.
    pub censored: bool,
    /// Routing convergence on the new location, where a strategy waits for it.
    pub converged_ms: Option<f64>,
    /// Distinct control packets about this producer from the trigger that
    /// led to this handover up to the next trigger.
    pub control_packets: usize,
}

impl Handover {
    pub fn correct_prediction(&self) -> Option<bool> {
        Some(self.predicted? == self.nap?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RttSample {
    pub consumer: u16,
    pub tag: String,
    pub seq: u64,
    pub sent_ms: f64,
    pub rtt_ms: f64,
    pub probe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub handovers: usize,
    pub dropped_sessions: usize,
    pub censored: usize,
    pub handover_latency_ms: Stats,
    pub latencies_ms: Vec<f64>,
    pub rtt_ms: Stats,
    pub interests_sent: u64,
    pub data_received: u64,
    pub content_to_interest: f64,
    pub control_sends: u64,
    pub control_packets: u64,
    /// Per-hop control transmissions by packet kind, plus flooded Interest
    /// copies beyond the first under `interest_flood_copy`.
    pub overhead_by_kind: BTreeMap<String, u64>,
    pub flood_extra_copies: u64,
    pub drops: BTreeMap<String, u64>,
}

/// A handover this close to the end of the trace with nothing received yet
/// is left out instead of being counted as dropped.
pub const CENSOR_MS: f64 = 2000.0;

fn ms(t: SimTime) -> f64 {
    t.as_ms()
}

fn producer_index(node: NodeId) -> Option<u16> {
    match node {
        NodeId::Producer(p) => Some(p),
        _ => None,
    }
}

fn tag_of(r: &TraceRecord) -> Option<&str> {
    r.name.as_ref()?.component(2)
}

/// Parses `apK` out of a `pJ->apK` prediction note or a forced detach cause.
fn predicted_ap(cause: &str) -> Option<u16> {
    let tail = if let Some(rest) = cause.split("predicted=ap").nth(1) {
        rest
    } else {
        cause.split("->ap").nth(1)?
    };
    tail.split(|c: char| !c.is_ascii_digit()).next()?.parse().ok()
}

pub fn handovers(trace: &Trace) -> Vec<Handover> {
    let recs = &trace.records;
    let last_ms = recs.last().map(|r| ms(r.time)).unwrap_or(0.0);
    let mut out = Vec::new();
    for (i, d) in recs.iter().enumerate() {
        if d.event != TraceEvent::Detach {
            continue;
        }
        let Some(p) = producer_index(d.node) else {
            continue;
        };
        let tag = format!("p{p}");
        let Some(NodeId::Ap(oap)) = d.hop_from else {
            continue;
        };
        let next_detach = recs[i + 1..]
            .iter()
            .position(|r| r.event == TraceEvent::Detach && r.node == d.node)
            .map(|k| i + 1 + k)
            .unwrap_or(recs.len());
        let after = &recs[i + 1..next_detach];
        let latency_ms = after
            .iter()
            .find(|r| r.event == TraceEvent::Recv && r.node == d.node && r.is_interest_like())
            .map(|r| ms(r.time) - ms(d.time));
        let attach = after.iter().find(|r| r.event == TraceEvent::Attach && r.node == d.node);
        let converged_ms = after
            .iter()
            .find(|r| r.event == TraceEvent::Converge && r.node == d.node)
            .map(|r| ms(r.time));
        let nap = attach.and_then(|r| match r.hop_to {
            Some(NodeId::Ap(a)) => Some(a),
            _ => None,
        });

        let trigger = recs[..i].iter().rposition(|r| r.event == TraceEvent::Trigger && r.node == d.node);
        let window_start = trigger.unwrap_or(i);
        let predicted = predicted_ap(&d.cause).or_else(|| {
            recs[window_start..i]
                .iter()
                .rev()
                .find(|r| r.event == TraceEvent::Predict && r.node == NodeId::Ap(oap) && r.cause.starts_with(&format!("{tag}->")))
                .and_then(|r| predicted_ap(&r.cause))
        });
        let window_end = recs[i + 1..]
            .iter()
            .position(|r| r.event == TraceEvent::Trigger && r.node == d.node)
            .map(|k| i + 1 + k)
            .unwrap_or(recs.len());
        let controls: BTreeSet<(PacketKind, u64)> = recs[window_start..window_end]
            .iter()
            .filter(|r| r.event == TraceEvent::Send && r.kind.is_some_and(PacketKind::is_control))
            .filter(|r| tag_of(r) == Some(tag.as_str()))
            .filter_map(|r| Some((r.kind?, r.nonce?)))
            .collect();

        out.push(Handover {
            producer: p,
            oap,
            detach_ms: ms(d.time),
            nap,
            attach_ms: attach.map(|r| ms(r.time)),
            predicted,
            latency_ms,
            censored: latency_ms.is_none() && last_ms - ms(d.time) < CENSOR_MS,
            converged_ms,
            control_packets: controls.len(),
        });
    }
    out
}

/// `(tag, seq)` from the last two components of an Interest or Data name.
fn tag_seq(r: &TraceRecord) -> Option<(String, u64)> {
    let name = r.name.as_ref()?;
    let n = name.len();
    Some((name.component(n.checked_sub(2)?)?.to_string(), name.last().parse().ok()?))
}

pub fn rtt_series(trace: &Trace) -> Vec<RttSample> {
    let mut sent: BTreeMap<(u16, String, u64), (f64, bool)> = BTreeMap::new();
    let mut out = Vec::new();
    for r in trace.iter() {
        let NodeId::Consumer(c) = r.node else {
            continue;
        };
        match r.event {
            TraceEvent::Originate => {
                if let Some((tag, seq)) = tag_seq(r) {
                    sent.insert((c, tag, seq), (ms(r.time), r.cause == "probe"));
                }
            }
            TraceEvent::Satisfy => {
                if let Some((tag, seq)) = tag_seq(r) {
                    if let Some((t0, probe)) = sent.remove(&(c, tag.clone(), seq)) {
                        out.push(RttSample { consumer: c, tag, seq, sent_ms: t0, rtt_ms: ms(r.time) - t0, probe });
                    }
                }
            }
            _ => {}
        }
    }
    out.sort_by(|a, b| a.sent_ms.total_cmp(&b.sent_ms).then(a.consumer.cmp(&b.consumer)).then(a.seq.cmp(&b.seq)));
    out
}

pub fn compute(trace: &Trace) -> RunMetrics {
    let hos = handovers(trace);
    let latencies: Vec<f64> = hos.iter().filter_map(|h| h.latency_ms).collect();
    let censored = hos.iter().filter(|h| h.censored).count();
    let rtts: Vec<f64> = rtt_series(trace).iter().map(|s| s.rtt_ms).collect();

    let mut interests_sent = 0;
    let mut data_received = 0;
    let mut control_sends = 0;
    let mut controls = BTreeSet::new();
    let mut flood_sends = 0u64;
    let mut flood_nonces = BTreeSet::new();
    let mut drops: BTreeMap<String, u64> = BTreeMap::new();
    let mut overhead: BTreeMap<String, u64> = BTreeMap::new();
    for r in trace.iter() {
        let at_consumer = matches!(r.node, NodeId::Consumer(_));
        match r.event {
            TraceEvent::Send => {
                if at_consumer && r.kind == Some(PacketKind::Interest) {
                    interests_sent += 1;
                    if r.cause.starts_with("flood/") {
                        flood_sends += 1;
                        flood_nonces.insert(r.nonce);
                    }
                }
                if let Some(k) = r.kind.filter(|k| k.is_control()) {
                    control_sends += 1;
                    *overhead.entry(k.as_str().to_string()).or_default() += 1;
                    controls.insert((k, r.nonce));
                }
            }
            TraceEvent::Satisfy if at_consumer => data_received += 1,
            TraceEvent::Drop => *drops.entry(r.cause.clone()).or_default() += 1,
            _ => {}
        }
    }
    let flood_extra_copies = flood_sends - flood_nonces.len() as u64;
    if flood_extra_copies > 0 {
        overhead.insert("interest_flood_copy".into(), flood_extra_copies);
    }
    RunMetrics {
        handovers: hos.len(),
        dropped_sessions: hos.len() - latencies.len() - censored,
        censored,
        handover_latency_ms: Stats::of(&latencies),
        latencies_ms: latencies,
        rtt_ms: Stats::of(&rtts),
        interests_sent,
        data_received,
        content_to_interest: if interests_sent == 0 { 0.0 } else { data_received as f64 / interests_sent as f64 },
        control_sends,
        control_packets: controls.len() as u64,
        overhead_by_kind: overhead,
        flood_extra_copies,
        drops,
    }
}
