//! Discrete-event simulation of the access network.

pub mod event;
pub mod rng;
pub mod sim;
pub mod topology;
pub mod trace;

pub use sim::{run, SimConfig, SimError, Simulation};
pub use topology::{build_topology, Topology, TopologyConfig};
pub use trace::{Trace, TraceEvent, TraceRecord};
