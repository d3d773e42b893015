//! Property checkers shared by the acceptance suite and the property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ndn_mobility::forwarder::{Action, Fib, RouterConfig, RouterState};
use ndn_mobility::packet::{Data, Interest, Packet};
use ndn_mobility::time::SimTime;
use ndn_mobility::{Name, NodeId};

/// Runs `check` over `cases` generated inputs with a fixed RNG seed, so the
/// same cases are drawn every time.
pub fn run_cases<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, proptest::test_runner::TestRng::deterministic_rng(config_algo()));
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

fn config_algo() -> proptest::test_runner::RngAlgorithm {
    proptest::test_runner::RngAlgorithm::ChaCha
}

// ---- reverse path ----

#[derive(Debug, Clone)]
pub struct NetCase {
    pub routers: u16,
    /// Undirected router links; a spanning tree plus extras.
    pub links: BTreeSet<(u16, u16)>,
    pub producer_at: u16,
    /// `(router, seq)` per consumer Interest; consumer i sits at its router.
    pub interests: Vec<(u16, u8)>,
}

pub fn net_case() -> impl Strategy<Value = NetCase> {
    (2u16..9).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<u16>> = (1..n).map(|i| (0..i).boxed()).collect();
        (
            Just(n),
            parents,
            proptest::collection::vec((0..n, 0..n), 0..6),
            0..n,
            proptest::collection::vec((0..n, 0u8..4), 1..8),
        )
            .prop_map(|(n, parents, extra, producer_at, interests)| {
                let mut links = BTreeSet::new();
                for (i, p) in parents.into_iter().enumerate() {
                    links.insert((p, i as u16 + 1));
                }
                for (a, b) in extra {
                    if a != b {
                        links.insert((a.min(b), a.max(b)));
                    }
                }
                NetCase { routers: n, links, producer_at, interests }
            })
    })
}

fn neighbors(case: &NetCase, r: u16) -> Vec<u16> {
    case.links
        .iter()
        .filter_map(|&(a, b)| if a == r { Some(b) } else if b == r { Some(a) } else { None })
        .collect()
}

/// Next hop from every router toward the producer's router, by BFS.
fn next_hops(case: &NetCase) -> BTreeMap<u16, u16> {
    let mut hop = BTreeMap::new();
    let mut seen = BTreeSet::from([case.producer_at]);
    let mut q = VecDeque::from([case.producer_at]);
    while let Some(r) = q.pop_front() {
        for n in neighbors(case, r) {
            if seen.insert(n) {
                hop.insert(n, r);
                q.push_back(n);
            }
        }
    }
    hop
}

/// Every Data hop `u -> v` must retrace an Interest hop `v -> u` for the same
/// name, and every consumer gets Data for each name it asked for.
pub fn check_reverse_path(case: NetCase) -> Result<(), TestCaseError> {
    let prefix: Name = "/prod".parse().unwrap();
    let producer = NodeId::Producer(0);
    let node = |r: u16| NodeId::Agg(r);
    let hops = next_hops(&case);
    let mut routers: BTreeMap<NodeId, RouterState> = BTreeMap::new();
    for r in 0..case.routers {
        let mut st = RouterState::new(node(r), RouterConfig::default());
        for n in neighbors(&case, r) {
            st.add_face(node(n));
        }
        if r == case.producer_at {
            st.add_face(producer);
            st.add_route(&prefix, producer);
        } else {
            st.add_route(&prefix, node(hops[&r]));
        }
        routers.insert(node(r), st);
    }
    for (i, &(r, _)) in case.interests.iter().enumerate() {
        let st = routers.get_mut(&node(r)).unwrap();
        st.add_face(NodeId::Consumer(i as u16));
    }

    let now = SimTime::ZERO;
    let mut interest_hops: BTreeSet<(NodeId, NodeId, Name)> = BTreeSet::new();
    let mut queue: VecDeque<(NodeId, NodeId, Packet)> = VecDeque::new();
    for (i, &(r, seq)) in case.interests.iter().enumerate() {
        let name = prefix.child(seq.to_string());
        queue.push_back((NodeId::Consumer(i as u16), node(r), Packet::Interest(Interest { name, nonce: i as u64 + 1 })));
    }
    let mut delivered: BTreeMap<u16, Vec<Name>> = BTreeMap::new();
    while let Some((from, to, packet)) = queue.pop_front() {
        match &packet {
            Packet::Interest(i) => {
                interest_hops.insert((from, to, i.name.clone()));
            }
            Packet::Data(d) => {
                prop_assert!(
                    interest_hops.contains(&(to, from, d.name.clone())),
                    "data {} went {from} -> {to} with no interest {to} -> {from}",
                    d.name
                );
            }
            _ => unreachable!(),
        }
        match to {
            NodeId::Producer(_) => {
                let Packet::Interest(i) = packet else { unreachable!() };
                let data = Data { name: i.name, payload_size: 1, path: vec![producer] };
                queue.push_back((producer, from, Packet::Data(data)));
            }
            NodeId::Consumer(c) => {
                let Packet::Data(d) = packet else { unreachable!() };
                delivered.entry(c).or_default().push(d.name);
            }
            _ => {
                let st = routers.get_mut(&to).unwrap();
                let actions = match &packet {
                    Packet::Interest(i) => st.process_interest(i, from, now),
                    Packet::Data(d) => st.process_data(d, from, now),
                    _ => unreachable!(),
                };
                for a in actions {
                    match a {
                        Action::Send { face, packet } => queue.push_back((to, face, packet)),
                        Action::Drop { cause, name, .. } => {
                            return Err(TestCaseError::fail(format!("{name} dropped at {to}: {cause}")));
                        }
                    }
                }
            }
        }
    }
    for (i, &(_, seq)) in case.interests.iter().enumerate() {
        let got = delivered.get(&(i as u16)).cloned().unwrap_or_default();
        prop_assert_eq!(got, vec![prefix.child(seq.to_string())], "consumer {}", i);
    }
    Ok(())
}

// ---- longest prefix match ----

#[derive(Debug, Clone)]
pub enum FibOp {
    Insert(Vec<u8>, u16),
    Remove(Vec<u8>),
}

#[derive(Debug, Clone)]
pub struct LpmCase {
    pub ops: Vec<FibOp>,
    pub query: Vec<u8>,
}

fn comps() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..3, 1..5)
}

pub fn lpm_case() -> impl Strategy<Value = LpmCase> {
    let op = prop_oneof![
        3 => (comps(), 0u16..8).prop_map(|(c, f)| FibOp::Insert(c, f)),
        1 => comps().prop_map(FibOp::Remove),
    ];
    (proptest::collection::vec(op, 0..12), comps()).prop_map(|(ops, query)| LpmCase { ops, query })
}

fn to_name(c: &[u8]) -> Name {
    Name::new(c.iter().map(|x| ["a", "b", "c"][*x as usize])).unwrap()
}

/// Compares the trie against a plain map scanned for the longest matching key.
pub fn check_lpm(case: LpmCase) -> Result<(), TestCaseError> {
    let mut fib = Fib::new();
    let mut oracle: BTreeMap<Vec<u8>, u16> = BTreeMap::new();
    for op in &case.ops {
        match op {
            FibOp::Insert(c, f) => {
                fib.insert(&to_name(c), NodeId::Agg(*f));
                oracle.insert(c.clone(), *f);
            }
            FibOp::Remove(c) => {
                fib.remove(&to_name(c));
                oracle.remove(c);
            }
        }
    }
    let expected = oracle
        .iter()
        .filter(|(k, _)| case.query.starts_with(k))
        .max_by_key(|(k, _)| k.len())
        .map(|(_, f)| NodeId::Agg(*f));
    prop_assert_eq!(fib.longest_prefix_match(&to_name(&case.query)), expected);
    prop_assert_eq!(fib.len(), oracle.len());
    Ok(())
}
