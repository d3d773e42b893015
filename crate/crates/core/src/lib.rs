//! Deterministic discrete-event simulator for producer mobility in Named Data
//! Networking: forwarding pipeline, mobility model, handover strategies, the
//! event engine and the experiment harness.

// `!(x > 0.0)` is used on purpose so NaN fails config checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod forwarder;
pub mod harness;
pub mod mobility;
pub mod name;
pub mod node;
pub mod packet;
pub mod strategy;
pub mod time;

pub use name::Name;
pub use node::{FaceId, NodeId};
pub use packet::{Packet, PacketKind};
pub use time::{SimDuration, SimTime};
