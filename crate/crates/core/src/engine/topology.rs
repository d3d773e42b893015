use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::{AccessPoint, Field, Point};
use crate::name::Name;
use crate::node::NodeId;
use crate::time::SimDuration;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("cell pitch must be positive, got {0}")]
    BadPitch(f64),
    #[error("aggregation block size must be at least 1")]
    BadFanOut,
    #[error("at least one core router is needed to join {0} aggregation routers")]
    NoCore(usize),
    #[error("link delay `{0}` must be positive")]
    BadDelay(&'static str),
    #[error("unknown delay preset `{0}`")]
    UnknownPreset(String),
    #[error("{what} {index} placed in cell {cell}, grid has {cells} cells")]
    CellOutOfRange { what: &'static str, index: usize, cell: usize, cells: usize },
    #[error("consumer {consumer} requests producer {producer}, which does not exist")]
    UnknownProducer { consumer: usize, producer: u16 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Wired,
    Wireless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkDelays {
    pub wireless_ms: f64,
    /// Consumer to its access point.
    pub access_ms: f64,
    pub ap_agg_ms: f64,
    pub agg_core_ms: f64,
}

impl LinkDelays {
    /// Cross-quadrant consumer to producer one-way delay of 25 ms.
    pub fn table1() -> Self {
        LinkDelays { wireless_ms: 0.5, access_ms: 0.5, ap_agg_ms: 11.75, agg_core_ms: 0.25 }
    }

    /// Cross-quadrant consumer to producer one-way delay of 20 ms.
    pub fn eq4() -> Self {
        LinkDelays { ap_agg_ms: 9.25, ..Self::table1() }
    }

    pub fn preset(name: &str) -> Result<Self, TopologyError> {
        match name {
            "table1" => Ok(Self::table1()),
            "eq4" => Ok(Self::eq4()),
            other => Err(TopologyError::UnknownPreset(other.to_string())),
        }
    }
}

impl Default for LinkDelays {
    fn default() -> Self {
        Self::table1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerSpec {
    pub cell: usize,
    pub producers: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProducerSpec {
    pub cell: usize,
    /// Start position relative to the cell's AP.
    #[serde(default)]
    pub offset_m: (f64, f64),
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default)]
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyConfig {
    pub rows: usize,
    pub cols: usize,
    pub pitch_m: f64,
    /// Side of the square block of APs under one aggregation router.
    pub agg_block: usize,
    pub cores: usize,
    /// Named delay set; overrides `delays` when present.
    pub delay_preset: Option<String>,
    pub delays: LinkDelays,
    pub consumers: Vec<ConsumerSpec>,
    pub producers: Vec<ProducerSpec>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        let start = |cell, offset_m, heading_deg| ProducerSpec { cell, offset_m, heading_deg, speed_kmh: 10.0 };
        TopologyConfig {
            rows: 4,
            cols: 4,
            pitch_m: 200.0,
            agg_block: 2,
            cores: 2,
            delay_preset: None,
            delays: LinkDelays::table1(),
            consumers: vec![
                ConsumerSpec { cell: 0, producers: vec![0, 1] },
                ConsumerSpec { cell: 15, producers: vec![2, 3] },
            ],
            producers: vec![
                start(5, (99.0, 0.0), 0.0),
                start(6, (0.0, 99.0), 90.0),
                start(9, (0.0, -99.0), 270.0),
                start(10, (99.0, 0.0), 0.0),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub delay: SimDuration,
    pub kind: LinkKind,
}

#[derive(Debug, Clone)]
pub struct ConsumerInfo {
    pub id: u16,
    pub ap: u16,
    pub producers: Vec<u16>,
    pub prefix: Name,
}

#[derive(Debug, Clone)]
pub struct ProducerInfo {
    pub id: u16,
    pub home_ap: u16,
    pub tag: String,
    pub start: Point,
    pub heading: f64,
    pub speed_kmh: f64,
}

/// Static part of the network: AP grid, router tree, wired links and the
/// shortest-path next hops between routers.
#[derive(Debug, Clone)]
pub struct Topology {
    pub rows: usize,
    pub cols: usize,
    pub pitch_m: f64,
    pub field: Field,
    pub delays: LinkDelays,
    pub aps: Vec<AccessPoint>,
    pub aggs: usize,
    pub cores: usize,
    pub consumers: Vec<ConsumerInfo>,
    pub producers: Vec<ProducerInfo>,
    links: BTreeMap<(NodeId, NodeId), Link>,
    neighbors: BTreeMap<NodeId, Vec<NodeId>>,
    /// `(router, ap) -> first hop` along a shortest wired path.
    next_hops: BTreeMap<(NodeId, u16), NodeId>,
}

pub fn build_topology(cfg: &TopologyConfig) -> Result<Topology, TopologyError> {
    if cfg.rows == 0 || cfg.cols == 0 {
        return Err(TopologyError::EmptyGrid);
    }
    if !(cfg.pitch_m > 0.0) {
        return Err(TopologyError::BadPitch(cfg.pitch_m));
    }
    if cfg.agg_block == 0 {
        return Err(TopologyError::BadFanOut);
    }
    let delays = match &cfg.delay_preset {
        Some(p) => LinkDelays::preset(p)?,
        None => cfg.delays,
    };
    for (label, v) in [
        ("wireless_ms", delays.wireless_ms),
        ("access_ms", delays.access_ms),
        ("ap_agg_ms", delays.ap_agg_ms),
        ("agg_core_ms", delays.agg_core_ms),
    ] {
        if !(v > 0.0) {
            return Err(TopologyError::BadDelay(label));
        }
    }
    let cells = cfg.rows * cfg.cols;
    let block_cols = cfg.cols.div_ceil(cfg.agg_block);
    let aggs = cfg.rows.div_ceil(cfg.agg_block) * block_cols;
    if aggs > 1 && cfg.cores == 0 {
        return Err(TopologyError::NoCore(aggs));
    }

    let aps: Vec<AccessPoint> = (0..cells)
        .map(|i| {
            let (r, c) = (i / cfg.cols, i % cfg.cols);
            AccessPoint {
                id: i as u16,
                position: Point::new(cfg.pitch_m * (c as f64 + 0.5), cfg.pitch_m * (r as f64 + 0.5)),
                prefix: ap_prefix(i as u16),
                cell_index: i,
            }
        })
        .collect();

    let mut links = BTreeMap::new();
    let mut add = |a: NodeId, b: NodeId, ms: f64| {
        let l = Link { delay: SimDuration::from_ms(ms), kind: LinkKind::Wired };
        links.insert((a, b), l);
        links.insert((b, a), l);
    };
    for i in 0..cells {
        let (r, c) = (i / cfg.cols, i % cfg.cols);
        let agg = (r / cfg.agg_block) * block_cols + c / cfg.agg_block;
        add(NodeId::Ap(i as u16), NodeId::Agg(agg as u16), delays.ap_agg_ms);
    }
    for a in 0..aggs {
        for k in 0..cfg.cores {
            add(NodeId::Agg(a as u16), NodeId::Core(k as u16), delays.agg_core_ms);
        }
    }

    let mut consumers = Vec::new();
    for (i, spec) in cfg.consumers.iter().enumerate() {
        if spec.cell >= cells {
            return Err(TopologyError::CellOutOfRange { what: "consumer", index: i, cell: spec.cell, cells });
        }
        if let Some(&p) = spec.producers.iter().find(|&&p| p as usize >= cfg.producers.len()) {
            return Err(TopologyError::UnknownProducer { consumer: i, producer: p });
        }
        add(NodeId::Consumer(i as u16), NodeId::Ap(spec.cell as u16), delays.access_ms);
        consumers.push(ConsumerInfo {
            id: i as u16,
            ap: spec.cell as u16,
            producers: spec.producers.clone(),
            prefix: ap_prefix(spec.cell as u16).child(format!("c{i}")),
        });
    }

    let field = Field { width: cfg.pitch_m * cfg.cols as f64, height: cfg.pitch_m * cfg.rows as f64 };
    let mut producers = Vec::new();
    for (i, spec) in cfg.producers.iter().enumerate() {
        if spec.cell >= cells {
            return Err(TopologyError::CellOutOfRange { what: "producer", index: i, cell: spec.cell, cells });
        }
        let ap = aps[spec.cell].position;
        let start = Point::new(
            (ap.x + spec.offset_m.0).clamp(0.0, field.width),
            (ap.y + spec.offset_m.1).clamp(0.0, field.height),
        );
        producers.push(ProducerInfo {
            id: i as u16,
            home_ap: spec.cell as u16,
            tag: format!("p{i}"),
            start,
            heading: spec.heading_deg.to_radians(),
            speed_kmh: spec.speed_kmh,
        });
    }

    let mut neighbors: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in links.keys() {
        if a.is_router() && b.is_router() {
            neighbors.entry(a).or_default().push(b);
        }
    }
    for v in neighbors.values_mut() {
        v.sort();
    }

    let mut topo = Topology {
        rows: cfg.rows,
        cols: cfg.cols,
        pitch_m: cfg.pitch_m,
        field,
        delays,
        aps,
        aggs,
        cores: cfg.cores,
        consumers,
        producers,
        links,
        neighbors,
        next_hops: BTreeMap::new(),
    };
    topo.next_hops = topo.compute_next_hops();
    Ok(topo)
}

pub fn ap_prefix(ap: u16) -> Name {
    Name::new(["net".to_string(), format!("ap{ap}")]).expect("non-empty components")
}

impl Topology {
    pub fn routers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors.keys().copied()
    }

    /// Wired router neighbors of `node`, sorted.
    pub fn router_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.neighbors.get(&node).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn wired_link(&self, a: NodeId, b: NodeId) -> Option<Link> {
        self.links.get(&(a, b)).copied()
    }

    pub fn wireless_link(&self) -> Link {
        Link { delay: SimDuration::from_ms(self.delays.wireless_ms), kind: LinkKind::Wireless }
    }

    /// Whether every pair of routers is joined by a wired path.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.routers().next() else {
            return true;
        };
        let mut seen = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in self.router_neighbors(n) {
                if !seen.contains(&m) {
                    seen.push(m);
                    queue.push_back(m);
                }
            }
        }
        seen.len() == self.neighbors.len()
    }

    fn compute_next_hops(&self) -> BTreeMap<(NodeId, u16), NodeId> {
        let mut out = BTreeMap::new();
        for ap in &self.aps {
            let target = NodeId::Ap(ap.id);
            let mut dist: BTreeMap<NodeId, usize> = BTreeMap::from([(target, 0)]);
            let mut queue = VecDeque::from([target]);
            while let Some(n) = queue.pop_front() {
                let d = dist[&n];
                for &m in self.router_neighbors(n) {
                    if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(m) {
                        e.insert(d + 1);
                        queue.push_back(m);
                    }
                }
            }
            for (&r, &d) in &dist {
                if d == 0 {
                    continue;
                }
                // Neighbors are sorted, so the first closer one is the lowest id.
                let hop = self
                    .router_neighbors(r)
                    .iter()
                    .copied()
                    .find(|m| dist.get(m) == Some(&(d - 1)))
                    .expect("BFS parent exists");
                out.insert((r, ap.id), hop);
            }
        }
        out
    }

    /// First hop from router `from` toward AP `ap`; `None` at the AP itself or
    /// when unreachable.
    pub fn next_hop(&self, from: NodeId, ap: u16) -> Option<NodeId> {
        self.next_hops.get(&(from, ap)).copied()
    }

    /// Router hops from `from` to AP `ap`, both ends included.
    pub fn router_path(&self, from: NodeId, ap: u16) -> Option<Vec<NodeId>> {
        let mut path = vec![from];
        let mut at = from;
        while at != NodeId::Ap(ap) {
            at = self.next_hop(at, ap)?;
            path.push(at);
        }
        Some(path)
    }

    /// One-way wired delay along [`Topology::router_path`].
    pub fn path_delay(&self, from: NodeId, ap: u16) -> Option<SimDuration> {
        let path = self.router_path(from, ap)?;
        Some(path.windows(2).fold(SimDuration::ZERO, |acc, w| acc + self.links[&(w[0], w[1])].delay))
    }

    pub fn ap_position(&self, ap: u16) -> Point {
        self.aps[ap as usize].position
    }

    /// The cell plus its edge-adjacent cells, clipped to the grid, in id order.
    pub fn cross_zone(&self, ap: u16) -> Vec<u16> {
        let mut out = vec![ap];
        out.extend(self.neighbors4(ap));
        out.sort();
        out
    }

    /// Edge-adjacent cells of `ap`, in id order.
    pub fn neighbors4(&self, ap: u16) -> Vec<u16> {
        let (r, c) = (ap as usize / self.cols, ap as usize % self.cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(ap - self.cols as u16);
        }
        if c > 0 {
            out.push(ap - 1);
        }
        if c + 1 < self.cols {
            out.push(ap + 1);
        }
        if r + 1 < self.rows {
            out.push(ap + self.cols as u16);
        }
        out
    }

    /// Cells within one step in any direction (including diagonals) plus the cell itself.
    pub fn square_zone(&self, ap: u16) -> Vec<u16> {
        let (r, c) = ((ap as usize / self.cols) as isize, (ap as usize % self.cols) as isize);
        let mut out = Vec::new();
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && cc >= 0 && (rr as usize) < self.rows && (cc as usize) < self.cols {
                    out.push((rr as usize * self.cols + cc as usize) as u16);
                }
            }
        }
        out
    }

    pub fn consumers_of(&self, producer: u16) -> impl Iterator<Item = &ConsumerInfo> {
        self.consumers.iter().filter(move |c| c.producers.contains(&producer))
    }

    /// Producer index named by `tag` (`p3` -> 3).
    pub fn producer_by_tag(&self, tag: &str) -> Option<u16> {
        let idx: u16 = tag.strip_prefix('p')?.parse().ok()?;
        ((idx as usize) < self.producers.len()).then_some(idx)
    }

    /// AP index named by an `apK` component.
    pub fn ap_by_component(&self, comp: &str) -> Option<u16> {
        let idx: u16 = comp.strip_prefix("ap")?.parse().ok()?;
        ((idx as usize) < self.aps.len()).then_some(idx)
    }
}
