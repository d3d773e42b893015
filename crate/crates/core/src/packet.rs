use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mobility::Point;
use crate::name::Name;
use crate::node::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct Interest {
    pub name: Name,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Data {
    pub name: Name,
    pub payload_size: u32,
    /// Nodes this Data has traversed, producer first.
    pub path: Vec<NodeId>,
}

/// Path-update message: the producer's predicted coordinates, sent to its
/// current access point when a handover looks imminent.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestPu {
    pub name: Name,
    pub nonce: u64,
    pub predicted: Point,
}

/// A redirected Interest. `name` is `original_name` with its access-point
/// prefix swapped for the (predicted or announced) new one.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestRed {
    pub name: Name,
    pub original_name: Name,
    pub nonce: u64,
}

impl InterestRed {
    /// Splits both names at their longest common suffix and returns
    /// `(old_prefix, new_prefix, first_suffix_component)`.
    pub fn prefixes(&self) -> Option<(Name, Name, &str)> {
        let a = self.original_name.components();
        let b = self.name.components();
        let common = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
        if common == 0 || common >= a.len() || common >= b.len() {
            return None;
        }
        let old = self.original_name.prefix(a.len() - common)?;
        let new = self.name.prefix(b.len() - common)?;
        Some((old, new, &a[a.len() - common]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixAnnouncement {
    pub announced_prefix: Name,
    pub nonce: u64,
}

/// Control messages used only by the baseline strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum NoticeBody {
    /// Reattached producer tells its old access point where it is now.
    MobilityUpdate { producer: NodeId, new_prefix: Name },
    /// Handover notification to a consumer, listing the zone's AP prefixes.
    HandoverNotice { producer: NodeId, zone: Vec<Name> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notice {
    pub name: Name,
    pub nonce: u64,
    pub body: NoticeBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
    InterestPu(InterestPu),
    InterestRed(InterestRed),
    PrefixAnnouncement(PrefixAnnouncement),
    Notice(Notice),
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self {
            Packet::Interest(_) => PacketKind::Interest,
            Packet::Data(_) => PacketKind::Data,
            Packet::InterestPu(_) => PacketKind::InterestPu,
            Packet::InterestRed(_) => PacketKind::InterestRed,
            Packet::PrefixAnnouncement(_) => PacketKind::PrefixAnnouncement,
            Packet::Notice(_) => PacketKind::Notice,
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            Packet::Interest(p) => &p.name,
            Packet::Data(p) => &p.name,
            Packet::InterestPu(p) => &p.name,
            Packet::InterestRed(p) => &p.name,
            Packet::PrefixAnnouncement(p) => &p.announced_prefix,
            Packet::Notice(p) => &p.name,
        }
    }

    pub fn nonce(&self) -> Option<u64> {
        match self {
            Packet::Data(_) => None,
            Packet::Interest(p) => Some(p.nonce),
            Packet::InterestPu(p) => Some(p.nonce),
            Packet::InterestRed(p) => Some(p.nonce),
            Packet::PrefixAnnouncement(p) => Some(p.nonce),
            Packet::Notice(p) => Some(p.nonce),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Interest,
    Data,
    InterestPu,
    InterestRed,
    PrefixAnnouncement,
    Notice,
}

impl PacketKind {
    /// Interests that travel toward the producer and can satisfy a PIT entry.
    pub fn is_interest_like(self) -> bool {
        matches!(self, PacketKind::Interest | PacketKind::InterestRed)
    }

    pub fn is_control(self) -> bool {
        matches!(self, PacketKind::InterestPu | PacketKind::PrefixAnnouncement | PacketKind::Notice)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Interest => "interest",
            PacketKind::Data => "data",
            PacketKind::InterestPu => "interest_pu",
            PacketKind::InterestRed => "interest_red",
            PacketKind::PrefixAnnouncement => "prefix_announcement",
            PacketKind::Notice => "notice",
        }
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PacketKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "interest" => PacketKind::Interest,
            "data" => PacketKind::Data,
            "interest_pu" => PacketKind::InterestPu,
            "interest_red" => PacketKind::InterestRed,
            "prefix_announcement" => PacketKind::PrefixAnnouncement,
            "notice" => PacketKind::Notice,
            other => return Err(format!("unknown packet kind `{other}`")),
        })
    }
}
