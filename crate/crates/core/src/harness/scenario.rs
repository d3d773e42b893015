//! Scenario files. One TOML table per module plus a `[run]` table for
//! duration, seeds and which strategies to run:
//!
//! ```toml
//! [run]
//! duration_s = 60
//! seed = 1
//! seeds = 100              # or an explicit list: [1, 5, 9]
//! strategy = "proposed"
//! compare = ["proposed", "interest_forwarding"]
//! accuracy = { forced = 0.5 }   # or "geometric"
//! sweep_accuracy = [0.5, 1.0]
//!
//! [mobility]
//! l2_delay_ms = 100
//!
//! [strategy]
//! grace_ms = 100
//! ```
//!
//! Every key is optional; absent ones take the defaults of the matching
//! config struct.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::sim::{ForwarderParams, ProbeSpec, WorkloadParams};
use crate::engine::{SimConfig, TopologyConfig};
use crate::mobility::{MobilityParams, RadioParams};
use crate::strategy::{StrategyId, StrategyParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// The old AP's prediction is whatever geometry gives.
    #[default]
    Geometric,
    /// The prediction is right with probability `q`.
    Forced(f64),
}

impl AccuracyMode {
    pub fn forced_q(self) -> Option<f64> {
        match self {
            AccuracyMode::Geometric => None,
            AccuracyMode::Forced(q) => Some(q),
        }
    }
}

/// `seeds = 100` means 100 consecutive seeds starting at `seed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn resolve(&self, base: u64) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).map(|i| base.wrapping_add(i)).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

impl std::str::FromStr for Seeds {
    type Err = String;

    /// `"100"` is a count, `"3,7,11"` a list.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        let nums = parts
            .iter()
            .map(|p| p.parse::<u64>().map_err(|e| format!("bad seed `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        match nums.as_slice() {
            [] => Err("empty seed list".into()),
            [n] if !s.contains(',') => Ok(Seeds::Count(*n)),
            _ => Ok(Seeds::List(nums)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub duration_s: f64,
    pub tick_ms: f64,
    pub event_limit: usize,
    pub seed: u64,
    pub seeds: Option<Seeds>,
    pub strategy: StrategyId,
    /// When non-empty, every listed strategy runs on the same seeds.
    pub compare: Vec<StrategyId>,
    pub accuracy: AccuracyMode,
    pub sweep_accuracy: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunSection {
            duration_s: sim.duration_s,
            tick_ms: sim.tick_ms,
            event_limit: sim.event_limit,
            seed: 1,
            seeds: None,
            strategy: StrategyId::Proposed,
            compare: Vec::new(),
            accuracy: AccuracyMode::Geometric,
            sweep_accuracy: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub run: RunSection,
    pub topology: TopologyConfig,
    pub mobility: MobilityParams,
    pub radio: RadioParams,
    pub strategy: StrategyParams,
    pub workload: WorkloadParams,
    pub forwarder: ForwarderParams,
    pub probes: Vec<ProbeSpec>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let qs = self.run.accuracy.forced_q().into_iter().chain(self.run.sweep_accuracy.iter().copied());
        for q in qs {
            if !(0.0..=1.0).contains(&q) {
                return Err(ScenarioError::Invalid(format!("accuracy q must lie in [0, 1], got {q}")));
            }
        }
        if self.seeds().is_empty() {
            return Err(ScenarioError::Invalid("no seeds".into()));
        }
        self.sim_config().validate().map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.run.seeds {
            Some(s) => s.resolve(self.run.seed),
            None => vec![self.run.seed],
        }
    }

    /// Strategies to run: `compare` if given, else the single `strategy`.
    pub fn strategies(&self) -> Vec<StrategyId> {
        if self.run.compare.is_empty() {
            vec![self.run.strategy]
        } else {
            self.run.compare.clone()
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            topology: self.topology.clone(),
            mobility: self.mobility,
            radio: self.radio,
            strategy: self.strategy,
            workload: self.workload,
            forwarder: self.forwarder,
            duration_s: self.run.duration_s,
            tick_ms: self.run.tick_ms,
            forced_accuracy: self.run.accuracy.forced_q(),
            probes: self.probes.clone(),
            event_limit: self.run.event_limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_scenario() {
        let s = Scenario::from_toml("").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!(s.seeds(), vec![1]);
        assert_eq!(s.sim_config(), SimConfig { duration_s: s.run.duration_s, ..SimConfig::default() });
    }

    #[test]
    fn run_table() {
        let s = Scenario::from_toml(
            r#"
            [run]
            seed = 10
            seeds = 3
            compare = ["proposed", "zone_flooding"]
            accuracy = { forced = 0.25 }
            [mobility]
            l2_delay_ms = 50
            "#,
        )
        .unwrap();
        assert_eq!(s.seeds(), vec![10, 11, 12]);
        assert_eq!(s.strategies(), vec![StrategyId::Proposed, StrategyId::ZoneFlooding]);
        assert_eq!(s.sim_config().forced_accuracy, Some(0.25));
        assert_eq!(s.sim_config().mobility.l2_delay_ms, 50.0);

        let s = Scenario::from_toml("[run]\nseeds = [4, 2]\naccuracy = \"geometric\"").unwrap();
        assert_eq!(s.seeds(), vec![4, 2]);
        assert_eq!(s.sim_config().forced_accuracy, None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Scenario::from_toml("[run]\naccuracy = { forced = 1.5 }"), Err(ScenarioError::Invalid(_))));
        assert!(matches!(Scenario::from_toml("[run]\nsweep_accuracy = [-0.1]"), Err(ScenarioError::Invalid(_))));
        assert!(matches!(Scenario::from_toml("[run]\nstrategy = \"teleport\""), Err(ScenarioError::Parse(_))));
        assert!(matches!(Scenario::from_toml("[bogus]\nx = 1"), Err(ScenarioError::Parse(_))));
        assert!(matches!(Scenario::from_toml("[run]\nseeds = []"), Err(ScenarioError::Invalid(_))));
        assert!(Scenario::load(Path::new("/nonexistent/s.toml")).is_err());
    }

    #[test]
    fn seed_arguments() {
        assert_eq!("100".parse::<Seeds>(), Ok(Seeds::Count(100)));
        assert_eq!("3,7".parse::<Seeds>(), Ok(Seeds::List(vec![3, 7])));
        assert_eq!("5,".parse::<Seeds>(), Ok(Seeds::List(vec![5])));
        assert!("x".parse::<Seeds>().is_err());
    }
}
