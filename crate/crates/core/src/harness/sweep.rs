//! Replicate runs over seeds, strategies and forced-accuracy points.
//! Runs share nothing, so with the `parallel` feature they go through rayon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{compute, RunMetrics, Stats};
use crate::engine::{run, SimConfig, SimError, Trace};
use crate::strategy::StrategyId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub strategy: StrategyId,
    /// Forced prediction accuracy; `None` leaves the config's mode alone.
    pub q: Option<f64>,
    pub seed: u64,
}

/// Strategy-major, then accuracy point, then seed.
pub fn plan(strategies: &[StrategyId], qs: &[Option<f64>], seeds: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(strategies.len() * qs.len() * seeds.len());
    for &strategy in strategies {
        for &q in qs {
            for &seed in seeds {
                jobs.push(Job { strategy, q, seed });
            }
        }
    }
    jobs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub job: Job,
    pub metrics: RunMetrics,
    #[serde(skip)]
    pub trace: Option<Trace>,
}

fn run_one(cfg: &SimConfig, job: Job, keep: bool) -> Result<RunResult, SimError> {
    let mut cfg = cfg.clone();
    if job.q.is_some() {
        cfg.forced_accuracy = job.q;
    }
    let trace = run(&cfg, job.strategy, job.seed)?;
    let metrics = compute(&trace);
    Ok(RunResult { job, metrics, trace: keep.then_some(trace) })
}

/// Runs every job, returning results in job order. The trace is kept only for
/// jobs where `keep_trace(index)` holds. The first error wins.
pub fn run_jobs(
    cfg: &SimConfig,
    jobs: &[Job],
    exec: Exec,
    keep_trace: impl Fn(usize) -> bool + Sync,
) -> Result<Vec<RunResult>, SimError> {
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().enumerate().map(|(i, &j)| run_one(cfg, j, keep_trace(i))).collect()
        }
        _ => jobs.iter().enumerate().map(|(i, &j)| run_one(cfg, j, keep_trace(i))).collect(),
    }
}

/// One (strategy, q) cell pooled over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: StrategyId,
    pub q: Option<f64>,
    pub runs: usize,
    pub handovers: usize,
    pub dropped_sessions: usize,
    pub censored: usize,
    /// Over every measured handover of every seed.
    pub handover_latency_ms: Stats,
    /// Over the per-seed means.
    pub seed_mean_latency_ms: Stats,
    pub rtt_ms: Stats,
    pub content_to_interest: Stats,
    pub control_packets: Stats,
    pub flood_extra_copies: u64,
    pub overhead_by_kind: BTreeMap<String, u64>,
    pub drops: BTreeMap<String, u64>,
}

type Cell<'a> = ((StrategyId, Option<f64>), Vec<&'a RunResult>);

pub fn aggregate(results: &[RunResult]) -> Vec<Aggregate> {
    let mut cells: Vec<Cell> = Vec::new();
    for r in results {
        let key = (r.job.strategy, r.job.q);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    cells
        .into_iter()
        .map(|((strategy, q), runs)| {
            let ms: Vec<&RunMetrics> = runs.iter().map(|r| &r.metrics).collect();
            let lat: Vec<f64> = ms.iter().flat_map(|m| m.latencies_ms.iter().copied()).collect();
            let seed_means: Vec<f64> =
                ms.iter().filter(|m| m.handover_latency_ms.n > 0).map(|m| m.handover_latency_ms.mean).collect();
            let per = |f: fn(&RunMetrics) -> f64| Stats::of(&ms.iter().map(|m| f(m)).collect::<Vec<_>>());
            let mut drops = BTreeMap::new();
            let mut overhead = BTreeMap::new();
            for m in &ms {
                for (k, v) in &m.drops {
                    *drops.entry(k.clone()).or_default() += v;
                }
                for (k, v) in &m.overhead_by_kind {
                    *overhead.entry(k.clone()).or_default() += v;
                }
            }
            Aggregate {
                strategy,
                q,
                runs: ms.len(),
                handovers: ms.iter().map(|m| m.handovers).sum(),
                dropped_sessions: ms.iter().map(|m| m.dropped_sessions).sum(),
                censored: ms.iter().map(|m| m.censored).sum(),
                handover_latency_ms: Stats::of(&lat),
                seed_mean_latency_ms: Stats::of(&seed_means),
                rtt_ms: per(|m| m.rtt_ms.mean),
                content_to_interest: per(|m| m.content_to_interest),
                control_packets: per(|m| m.control_packets as f64),
                flood_extra_copies: ms.iter().map(|m| m.flood_extra_copies).sum(),
                overhead_by_kind: overhead,
                drops,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimConfig {
        SimConfig { duration_s: 8.0, ..SimConfig::default() }
    }

    #[test]
    fn plan_order() {
        let jobs = plan(&[StrategyId::Proposed, StrategyId::ZoneFlooding], &[None, Some(0.5)], &[1, 2]);
        assert_eq!(jobs.len(), 8);
        assert_eq!(jobs[0], Job { strategy: StrategyId::Proposed, q: None, seed: 1 });
        assert_eq!(jobs[3], Job { strategy: StrategyId::Proposed, q: Some(0.5), seed: 2 });
        assert_eq!(jobs[4].strategy, StrategyId::ZoneFlooding);
    }

    #[test]
    fn parallel_matches_sequential() {
        let jobs = plan(&StrategyId::ALL, &[None], &[3, 4]);
        let a = run_jobs(&short(), &jobs, Exec::Sequential, |i| i == 0).unwrap();
        let b = run_jobs(&short(), &jobs, Exec::Parallel, |i| i == 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.job, y.job);
            assert_eq!(x.metrics, y.metrics);
        }
        assert_eq!(a[0].trace, b[0].trace);
        assert!(a[0].trace.is_some() && a[1].trace.is_none());
    }

    #[test]
    fn aggregate_pools_seeds() {
        let jobs = plan(&[StrategyId::Proposed], &[None], &[5, 6]);
        let res = run_jobs(&short(), &jobs, Exec::default(), |_| false).unwrap();
        let agg = aggregate(&res);
        assert_eq!(agg.len(), 1);
        let a = &agg[0];
        assert_eq!(a.runs, 2);
        assert_eq!(a.handovers, res[0].metrics.handovers + res[1].metrics.handovers);
        let n: usize = res.iter().map(|r| r.metrics.latencies_ms.len()).sum();
        assert_eq!(a.handover_latency_ms.n, n);
        assert!((0.0..=1.0).contains(&a.content_to_interest.mean));
    }

    #[test]
    fn forced_q_overrides_config() {
        let jobs = [Job { strategy: StrategyId::Proposed, q: Some(2.0), seed: 1 }];
        assert!(matches!(run_jobs(&short(), &jobs, Exec::Sequential, |_| false), Err(SimError::Config(_))));
    }
}
