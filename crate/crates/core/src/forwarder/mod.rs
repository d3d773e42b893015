//! Per-router NDN forwarding: FIB, PIT, content store and the packet pipeline.

pub mod cs;
pub mod fib;
pub mod pit;
pub mod router;

pub use cs::{ContentStore, DeadNonceList};
pub use fib::{longest_prefix_match, Fib, FibEntry};
pub use pit::{InRecord, InsertOutcome, Pit, PitEntry};
pub use router::{Accepted, Action, DropCause, RouterConfig, RouterState};
