//! Experiment harness: scenario files, replicate sweeps and result output.

pub mod io;
pub mod metrics;
pub mod scenario;
pub mod sweep;

pub use io::{write_outputs, Report};
pub use scenario::{AccuracyMode, Scenario, ScenarioError, Seeds};
pub use sweep::{aggregate, plan, run_jobs, Aggregate, Exec, Job, RunResult};
