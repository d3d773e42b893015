//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail with the default
//! parameters; the test breaks if one of them starts passing, or if any
//! other criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::time::Instant;

use ndn_mobility::engine::sim::ProbeSpec;
use ndn_mobility::engine::{build_topology, run, SimConfig, Trace, TraceEvent};
use ndn_mobility::harness::metrics::{handovers, rtt_series, Handover};
use ndn_mobility::harness::{aggregate, plan, run_jobs, Aggregate, Exec, RunResult};
use ndn_mobility::mobility::{update_direction, update_speed, MobilityParams};
use ndn_mobility::packet::PacketKind;
use ndn_mobility::strategy::StrategyId;
use ndn_mobility::NodeId;

use common::{check_lpm, check_reverse_path, lpm_case, net_case, run_cases};

const KNOWN_FAILURES: &[u8] = &[4];

// Pinned tolerances.
const LATENCY_REL_TOL: f64 = 0.10;
const PAPER_LP_MS: f64 = 109.0;
const PAPER_ZF_MS: f64 = 134.0;
const PAPER_IF_MS: f64 = 150.0;
const C1_RUNTIME_S: f64 = 60.0;
/// Smallest link delay in the network (wireless hop and consumer access).
const QUANTUM_MS: f64 = 0.5;
const PROBE_BAND_MS: (f64, f64) = (135.0, 145.0);
const IF_PROBE_MIN_MS: f64 = 155.0;
/// Post-handover RTT above the shortest path to the new AP that counts as
/// visible path stretch.
const STRETCH_MIN_MS: f64 = 10.0;
const OUTAGE_BAND_MS: (f64, f64) = (1150.0, 1250.0);
const CTI_MIN_HALF: f64 = 0.90;
const CTI_MIN_FULL: f64 = 0.95;
const EQ_TOL: f64 = 1e-12;

const SEEDS_100: std::ops::RangeInclusive<u64> = 1..=100;

fn line(id: u8, pass: bool, detail: String) -> (u8, bool) {
    let known = if KNOWN_FAILURES.contains(&id) { " [known]" } else { "" };
    println!("{} criterion {id}{known}: {detail}", if pass { "PASS" } else { "FAIL" });
    (id, pass)
}

fn cfg60() -> SimConfig {
    SimConfig { duration_s: 60.0, ..SimConfig::default() }
}

fn sweep(cfg: &SimConfig, strategy: StrategyId, q: Option<f64>, seeds: impl IntoIterator<Item = u64>) -> Vec<RunResult> {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    run_jobs(cfg, &plan(&[strategy], &[q], &seeds), Exec::default(), |_| false).expect("simulation")
}

fn pooled(runs: &[RunResult]) -> Aggregate {
    aggregate(runs).remove(0)
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

fn band(paper: f64) -> (f64, f64) {
    (paper * (1.0 - LATENCY_REL_TOL), paper * (1.0 + LATENCY_REL_TOL))
}

struct Shared {
    interest_forwarding: Aggregate,
}

fn criterion_1() -> ((u8, bool), Shared) {
    let cfg = cfg60();
    let topo = build_topology(&cfg.topology).unwrap();
    let d = topo.delays;
    // Calibration: cross-quadrant consumer<->producer round trip and the
    // worst oAP->nAP->producer leg.
    let mut cross_rtts = BTreeSet::new();
    for c in &topo.consumers {
        for p in &topo.producers {
            let wired = topo.path_delay(NodeId::Ap(c.ap), p.home_ap).unwrap().as_ms();
            if topo.router_path(NodeId::Ap(c.ap), p.home_ap).unwrap().iter().any(|n| matches!(n, NodeId::Core(_))) {
                cross_rtts.insert(((2.0 * (d.access_ms + wired + d.wireless_ms)) * 1000.0).round() as u64);
            }
        }
    }
    let mut worst_leg: f64 = 0.0;
    for a in 0..topo.aps.len() as u16 {
        for b in topo.neighbors4(a) {
            worst_leg = worst_leg.max(topo.path_delay(NodeId::Ap(a), b).unwrap().as_ms() + d.wireless_ms);
        }
    }
    let calibrated = cross_rtts == BTreeSet::from([50_000]) && worst_leg <= 25.0;

    let started = Instant::now();
    let lp = pooled(&sweep(&cfg, StrategyId::Proposed, None, SEEDS_100));
    let zf = pooled(&sweep(&cfg, StrategyId::ZoneFlooding, None, SEEDS_100));
    let fw = pooled(&sweep(&cfg, StrategyId::InterestForwarding, None, SEEDS_100));
    let elapsed = started.elapsed().as_secs_f64();

    let (l, z, f) = (lp.handover_latency_ms.mean, zf.handover_latency_ms.mean, fw.handover_latency_ms.mean);
    let in_tol = within(l, band(PAPER_LP_MS)) && within(z, band(PAPER_ZF_MS)) && within(f, band(PAPER_IF_MS));
    let ordered = l < z && z < f;
    let spec_bands = format!(
        "in 100-115/125-140/145-160: {}/{}/{}",
        within(l, (100.0, 115.0)),
        within(z, (125.0, 140.0)),
        within(f, (145.0, 160.0))
    );
    let pass = calibrated && in_tol && ordered && elapsed < C1_RUNTIME_S;
    let r = line(
        1,
        pass,
        format!(
            "H_p mean LP {l:.2} ZF {z:.2} IF {f:.2} ms over {} handovers each (+-10% of 109/134/150), {spec_bands}; \
             cross RTT 50 ms {calibrated}, oAP->nAP->producer at most {worst_leg} ms (<= 25); runtime {elapsed:.1} s",
            lp.handover_latency_ms.n
        ),
    );
    (r, Shared { interest_forwarding: fw })
}

/// Consumer-to-oAP delay of the last Interest for `h`'s producer before it left.
fn consumer_to_oap_ms(trace: &Trace, h: &Handover, consumer: u16) -> Option<f64> {
    let tag = format!("p{}", h.producer);
    let recs = &trace.records;
    let recv = recs.iter().rev().find(|r| {
        r.event == TraceEvent::Recv
            && r.node == NodeId::Ap(h.oap)
            && r.kind == Some(PacketKind::Interest)
            && r.time.as_ms() < h.detach_ms
            && r.name.as_ref().and_then(|n| n.component(2)) == Some(tag.as_str())
    })?;
    let sent = recs.iter().find(|r| {
        r.event == TraceEvent::Send && r.node == NodeId::Consumer(consumer) && r.nonce == recv.nonce
    })?;
    Some(recv.time.as_ms() - sent.time.as_ms())
}

struct ProbeOutcome {
    rtt: f64,
    steady: f64,
    /// Mean post-handover RTT minus the shortest-path RTT to the new AP.
    stretch: Option<f64>,
}

fn probe_outcomes(cfg: &SimConfig, strategy: StrategyId, seed: u64) -> Vec<ProbeOutcome> {
    let base = run(cfg, StrategyId::Proposed, seed).unwrap();
    let topo = build_topology(&cfg.topology).unwrap();
    let hos: Vec<Handover> = handovers(&base).into_iter().filter(|h| h.attach_ms.is_some() && !h.censored).collect();
    let mut probes = Vec::new();
    for h in &hos {
        let consumer = topo.consumers_of(h.producer).next().unwrap().id;
        if let Some(d) = consumer_to_oap_ms(&base, h, consumer) {
            probes.push((h.clone(), consumer, ProbeSpec { consumer, producer: h.producer, at_ms: h.detach_ms - d + 0.001 }));
        }
    }
    let cfg = SimConfig { probes: probes.iter().map(|p| p.2).collect(), ..cfg.clone() };
    let trace = run(&cfg, strategy, seed).unwrap();
    let again: Vec<f64> = handovers(&trace).iter().map(|h| h.detach_ms).collect();
    assert_eq!(again, handovers(&base).iter().map(|h| h.detach_ms).collect::<Vec<_>>(), "probes moved a detach");
    let series = rtt_series(&trace);
    let all = handovers(&trace);
    probes
        .iter()
        .filter_map(|(h, consumer, spec)| {
            let tag = format!("p{}", h.producer);
            let pair = |s: &&ndn_mobility::harness::metrics::RttSample| s.consumer == *consumer && s.tag == tag;
            let rtt = series.iter().find(|s| s.probe && (s.sent_ms - spec.at_ms).abs() < 1e-6)?.rtt_ms;
            let before: Vec<f64> = series
                .iter()
                .filter(pair)
                .filter(|s| !s.probe && s.sent_ms + s.rtt_ms < h.detach_ms && s.sent_ms > h.detach_ms - 2000.0)
                .map(|s| s.rtt_ms)
                .collect();
            if before.is_empty() {
                return None;
            }
            let steady = before.iter().sum::<f64>() / before.len() as f64;
            let attach = h.attach_ms?;
            let next_detach = all
                .iter()
                .filter(|o| o.producer == h.producer && o.detach_ms > h.detach_ms)
                .map(|o| o.detach_ms)
                .next()
                .unwrap_or(f64::INFINITY);
            let after: Vec<f64> = series
                .iter()
                .filter(pair)
                .filter(|s| !s.probe && s.sent_ms >= attach + 500.0 && s.sent_ms <= attach + 3000.0)
                .filter(|s| s.sent_ms + s.rtt_ms < next_detach)
                .map(|s| s.rtt_ms)
                .collect();
            let d = topo.delays;
            let c_ap = topo.consumers[*consumer as usize].ap;
            let direct = 2.0 * (d.access_ms + topo.path_delay(NodeId::Ap(c_ap), h.nap?)?.as_ms() + d.wireless_ms);
            let stretch = (next_detach > attach + 3000.0 && !after.is_empty())
                .then(|| after.iter().sum::<f64>() / after.len() as f64 - direct);
            Some(ProbeOutcome { rtt, steady, stretch })
        })
        .collect()
}

fn criterion_2() -> (u8, bool) {
    let mut cfg = cfg60();
    cfg.topology.delay_preset = Some("eq4".into());
    let l2 = cfg.mobility.l2_delay_ms;
    let lp: Vec<ProbeOutcome> = (1..=10).flat_map(|s| probe_outcomes(&cfg, StrategyId::Proposed, s)).collect();
    let fw: Vec<ProbeOutcome> = (1..=10).flat_map(|s| probe_outcomes(&cfg, StrategyId::InterestForwarding, s)).collect();

    let lp_eq4 = lp.iter().all(|o| (o.rtt - (l2 + o.steady)).abs() <= QUANTUM_MS && within(o.rtt, PROBE_BAND_MS));
    let lp_flat = lp.iter().filter_map(|o| o.stretch).all(|e| e.abs() <= QUANTUM_MS);
    let fw_high = fw.iter().all(|o| o.rtt >= IF_PROBE_MIN_MS);
    let fw_stretch = fw.iter().filter_map(|o| o.stretch).all(|e| e >= STRETCH_MIN_MS);
    let n_elev = |v: &[ProbeOutcome]| v.iter().filter(|o| o.stretch.is_some()).count();
    let enough = !lp.is_empty() && lp.len() == fw.len() && n_elev(&lp) > 0 && n_elev(&fw) > 0;
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        format!("{lo:.2}..{hi:.2}")
    };
    let col = |v: &[ProbeOutcome], f: fn(&ProbeOutcome) -> Option<f64>| v.iter().filter_map(f).collect::<Vec<_>>();
    line(
        2,
        enough && lp_eq4 && lp_flat && fw_high && fw_stretch,
        format!(
            "{} probes at detach; LP RTT {} ms (L2 + steady {} +- {QUANTUM_MS}), post-handover stretch {}; \
             IF RTT {} ms (>= {IF_PROBE_MIN_MS}), post-handover stretch {} (>= {STRETCH_MIN_MS})",
            lp.len(),
            range(&col(&lp, |o| Some(o.rtt))),
            range(&col(&lp, |o| Some(l2_plus(o)))),
            range(&col(&lp, |o| o.stretch)),
            range(&col(&fw, |o| Some(o.rtt))),
            range(&col(&fw, |o| o.stretch)),
        ),
    )
}

fn l2_plus(o: &ProbeOutcome) -> f64 {
    MobilityParams::default().l2_delay_ms + o.steady
}

fn criterion_3() -> (u8, bool) {
    let cfg = cfg60();
    assert_eq!(cfg.strategy.convergence_ms, 1100.0);
    let mut outages = Vec::new();
    let (mut arrived, mut dropped) = (0usize, 0usize);
    for seed in 1..=20 {
        let trace = run(&cfg, StrategyId::NoManagement, seed).unwrap();
        for h in handovers(&trace) {
            let Some(conv) = h.converged_ms else { continue };
            outages.push(conv - h.detach_ms);
            let tag = format!("p{}", h.producer);
            let in_window = |r: &&ndn_mobility::engine::TraceRecord| {
                r.node == NodeId::Ap(h.oap)
                    && r.is_interest_like()
                    && r.time.as_ms() >= h.detach_ms
                    && r.time.as_ms() < conv
                    && r.name.as_ref().and_then(|n| n.component(2)) == Some(tag.as_str())
            };
            let recv: BTreeSet<u64> =
                trace.of(TraceEvent::Recv).filter(in_window).filter_map(|r| r.nonce).collect();
            let drop: BTreeSet<u64> = trace
                .of(TraceEvent::Drop)
                .filter(in_window)
                .filter(|r| r.cause == "producer-detached")
                .filter_map(|r| r.nonce)
                .collect();
            arrived += recv.len();
            dropped += recv.intersection(&drop).count();
        }
    }
    let lo = outages.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = outages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = !outages.is_empty() && within(lo, OUTAGE_BAND_MS) && within(hi, OUTAGE_BAND_MS) && arrived > 0 && arrived == dropped;
    line(
        3,
        pass,
        format!(
            "{} outages (detach to convergence) {lo:.2}..{hi:.2} ms in {OUTAGE_BAND_MS:?}; {dropped}/{arrived} Interests reaching oAP dropped",
            outages.len()
        ),
    )
}

fn criterion_4(shared: &Shared) -> (u8, bool) {
    let cfg = cfg60();
    let half = sweep(&cfg, StrategyId::Proposed, Some(0.5), SEEDS_100);
    let full = sweep(&cfg, StrategyId::Proposed, Some(1.0), SEEDS_100);
    let min_cti = |v: &[RunResult]| v.iter().map(|r| r.metrics.content_to_interest).fold(f64::INFINITY, f64::min);
    let lp_half = pooled(&half).handover_latency_ms.mean;
    let fw = shared.interest_forwarding.handover_latency_ms.mean;
    let (c_half, c_full) = (min_cti(&half), min_cti(&full));
    let pass = lp_half < fw && c_half >= CTI_MIN_HALF && c_full >= CTI_MIN_FULL;
    line(
        4,
        pass,
        format!(
            "q=0.5 LP H_p mean {lp_half:.2} ms vs IF {fw:.2} ms (must be below); per-run c/i min {c_half:.4} at q=0.5 (>= {CTI_MIN_HALF}), {c_full:.4} at q=1 (>= {CTI_MIN_FULL})"
        ),
    )
}

fn criterion_5() -> (u8, bool) {
    let cfg = cfg60();
    let mut per_handover = BTreeMap::<usize, usize>::new();
    for seed in 1..=20 {
        let trace = run(&cfg, StrategyId::Proposed, seed).unwrap();
        for h in handovers(&trace) {
            if h.correct_prediction() == Some(true) && h.latency_ms.is_some() {
                *per_handover.entry(h.control_packets).or_default() += 1;
            }
        }
    }
    let lp_ok = per_handover.keys().eq([1].iter());

    // Every flooded Interest goes out as exactly Z copies.
    let mut by_zone = BTreeMap::<u64, (u64, u64)>::new();
    let mut zf_ok = true;
    for seed in 1..=20 {
        let trace = run(&cfg, StrategyId::ZoneFlooding, seed).unwrap();
        let mut groups = BTreeMap::<u64, (u64, u64)>::new();
        for r in trace.of(TraceEvent::Send) {
            if !matches!(r.node, NodeId::Consumer(_)) || r.kind != Some(PacketKind::Interest) {
                continue;
            }
            if let Some(z) = r.cause.strip_prefix("flood/").and_then(|z| z.parse::<u64>().ok()) {
                let g = groups.entry(r.nonce.unwrap()).or_insert((z, 0));
                zf_ok &= g.0 == z;
                g.1 += 1;
            }
        }
        let mut expected = 0;
        for (z, copies) in groups.values() {
            zf_ok &= copies == z;
            let e = by_zone.entry(*z).or_default();
            e.0 += 1;
            e.1 += copies - 1;
            expected += z - 1;
        }
        zf_ok &= ndn_mobility::harness::metrics::compute(&trace).flood_extra_copies == expected;
    }
    zf_ok &= by_zone.iter().all(|(z, (n, extra))| *extra == n * (z - 1));
    let zones: Vec<String> = by_zone.iter().map(|(z, (n, extra))| format!("Z={z}: N={n} extra={extra}")).collect();
    line(
        5,
        lp_ok && zf_ok && !by_zone.is_empty(),
        format!("LP control packets per correct handover {per_handover:?} (count: handovers); ZF {}", zones.join(", ")),
    )
}

fn eq_vectors() -> Result<usize, String> {
    let p = MobilityParams::default();
    // (v_old, dv, p, expected) in km/h with v_max 30 and p_s 0.5.
    let speed = [
        (12.5, -1.5, 0.25, 11.0),
        (29.0, 3.0, 0.3, 30.0),
        (30.0, 2.5, 0.5, 30.0),
        (1.0, -3.0, 0.2, 0.0),
        (0.0, -0.5, 0.0, 0.0),
        (10.0, 2.0, 0.51, 0.0),
        (0.0, 3.0, 1.0, 0.0),
    ];
    for (v, dv, pr, want) in speed {
        let got = update_speed(v, dv, pr, &p);
        if (got - want).abs() > EQ_TOL {
            return Err(format!("speed({v}, {dv}, {pr}) = {got}, want {want}"));
        }
    }
    let heading = [
        (PI / 2.0, PI / 4.0, 3.0 * PI / 4.0),
        (7.0 * PI / 4.0, PI / 2.0, PI / 4.0),
        (0.1, -0.3, 2.0 * PI - 0.2),
        (PI, 0.0, PI),
    ];
    for (phi, d, want) in heading {
        let got = update_direction(phi, d);
        if (got - want).abs() > EQ_TOL {
            return Err(format!("direction({phi}, {d}) = {got}, want {want}"));
        }
    }
    Ok(speed.len() + heading.len())
}

fn determinism() -> Result<usize, String> {
    let variants: [(u64, &str, Option<f64>); 5] =
        [(1, "table1", None), (2, "eq4", None), (3, "table1", Some(0.5)), (4, "eq4", Some(0.0)), (5, "table1", Some(1.0))];
    let mut n = 0;
    for strategy in StrategyId::ALL {
        for (seed, preset, q) in variants {
            let mut cfg = SimConfig { duration_s: 15.0, forced_accuracy: q, ..SimConfig::default() };
            cfg.topology.delay_preset = Some(preset.into());
            let (a, b) = (run(&cfg, strategy, seed).unwrap(), run(&cfg, strategy, seed).unwrap());
            let (mut ca, mut cb) = (Vec::new(), Vec::new());
            a.write_csv(&mut ca).unwrap();
            b.write_csv(&mut cb).unwrap();
            if a != b || ca != cb {
                return Err(format!("{strategy} seed {seed} {preset} q={q:?} diverged"));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn criterion_6() -> (u8, bool) {
    let rp = run_cases(1000, net_case(), check_reverse_path);
    let lpm = run_cases(10_000, lpm_case(), check_lpm);
    let eq = eq_vectors();
    let det = determinism();
    fn show<T>(r: &Result<T, String>, ok: String) -> String {
        match r {
            Ok(_) => ok,
            Err(e) => format!("FAILED ({e})"),
        }
    }
    line(
        6,
        rp.is_ok() && lpm.is_ok() && eq.is_ok() && det.is_ok(),
        format!(
            "reverse path {}; LPM oracle {}; speed/heading vectors {}; determinism {}",
            show(&rp, "1000 topologies ok".into()),
            show(&lpm, "10000 pairs ok".into()),
            show(&eq, format!("{} ok", eq.as_ref().unwrap_or(&0))),
            show(&det, format!("{} scenarios bit-identical", det.as_ref().unwrap_or(&0))),
        ),
    )
}

#[derive(Default, Debug)]
struct StoreFate {
    stored: usize,
    recovered_delivered: usize,
    recovered: usize,
    discarded: usize,
    delivered_after_discard: usize,
}

fn store_fates(cfg: &SimConfig, seeds: std::ops::RangeInclusive<u64>) -> StoreFate {
    let t_s = cfg.strategy.store_time(cfg.mobility.l2_delay_ms).as_ms();
    let mut f = StoreFate::default();
    for seed in seeds {
        let trace = run(cfg, StrategyId::Proposed, seed).unwrap();
        let end = trace.records.last().unwrap().time.as_ms();
        let producer_recv = |nonce: u64, after: f64| {
            trace.of(TraceEvent::Recv).any(|r| {
                matches!(r.node, NodeId::Producer(_)) && r.nonce == Some(nonce) && r.time.as_ms() >= after
            })
        };
        for s in trace.of(TraceEvent::Store) {
            let t = s.time.as_ms();
            if t + t_s > end {
                continue;
            }
            f.stored += 1;
            let nonce = s.nonce.unwrap();
            let later = |e: TraceEvent| {
                trace.of(e).find(|r| r.node == s.node && r.nonce == Some(nonce) && r.time.as_ms() >= t).map(|r| r.time.as_ms())
            };
            if let Some(rt) = later(TraceEvent::Recover) {
                f.recovered += 1;
                f.recovered_delivered += producer_recv(nonce, rt) as usize;
            }
            if let Some(dt) = later(TraceEvent::Discard) {
                f.discarded += 1;
                f.delivered_after_discard += producer_recv(nonce, dt) as usize;
            }
        }
    }
    f
}

fn criterion_7() -> (u8, bool) {
    let cfg = SimConfig { forced_accuracy: Some(0.0), ..cfg60() };
    let recover = store_fates(&cfg, 1..=30);
    let mut short = cfg.clone();
    short.strategy.t_s_ms = Some(150.0);
    let expire = store_fates(&short, 1..=30);
    let pass = recover.stored > 0
        && recover.recovered_delivered == recover.stored
        && recover.delivered_after_discard == 0
        && expire.stored > 0
        && expire.discarded == expire.stored
        && expire.recovered == 0
        && expire.delivered_after_discard == 0;
    line(
        7,
        pass,
        format!(
            "q=0, t_s {} ms: {}/{} stored copies re-delivered after the announcement, {} after discard; \
             t_s 150 ms: {}/{} discarded before the announcement, {} recovered, {} delivered after discard",
            cfg.strategy.store_time(cfg.mobility.l2_delay_ms).as_ms(),
            recover.recovered_delivered,
            recover.stored,
            recover.delivered_after_discard,
            expire.discarded,
            expire.stored,
            expire.recovered,
            expire.delivered_after_discard
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let (c1, shared) = criterion_1();
    let results = [c1, criterion_2(), criterion_3(), criterion_4(&shared), criterion_5(), criterion_6(), criterion_7()];
    let unexpected: Vec<String> = results
        .iter()
        .filter(|(id, pass)| *pass == KNOWN_FAILURES.contains(id))
        .map(|(id, pass)| format!("criterion {id} {}", if *pass { "passed but is listed as a known failure" } else { "failed" }))
        .collect();
    assert!(unexpected.is_empty(), "{}", unexpected.join("; "));
}
