use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identity of one simulated node. Doubles as a face identifier: a router's
/// face toward a neighbor is named by that neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Core(u16),
    Agg(u16),
    Ap(u16),
    Consumer(u16),
    Producer(u16),
}

pub type FaceId = NodeId;

impl NodeId {
    pub fn is_router(self) -> bool {
        matches!(self, NodeId::Core(_) | NodeId::Agg(_) | NodeId::Ap(_))
    }

    pub fn ap_index(self) -> Option<usize> {
        match self {
            NodeId::Ap(i) => Some(i as usize),
            _ => None,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Core(i) => write!(f, "core{i}"),
            NodeId::Agg(i) => write!(f, "agg{i}"),
            NodeId::Ap(i) => write!(f, "ap{i}"),
            NodeId::Consumer(i) => write!(f, "c{i}"),
            NodeId::Producer(i) => write!(f, "p{i}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unrecognized node label `{0}`")]
pub struct ParseNodeIdError(String);

impl FromStr for NodeId {
    type Err = ParseNodeIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(|| ParseNodeIdError(s.into()))?;
        let (kind, idx) = s.split_at(split);
        let idx: u16 = idx.parse().map_err(|_| ParseNodeIdError(s.into()))?;
        Ok(match kind {
            "core" => NodeId::Core(idx),
            "agg" => NodeId::Agg(idx),
            "ap" => NodeId::Ap(idx),
            "c" => NodeId::Consumer(idx),
            "p" => NodeId::Producer(idx),
            _ => return Err(ParseNodeIdError(s.into())),
        })
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
