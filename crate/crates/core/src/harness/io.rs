//! Result files: `metrics.json`, `trace.csv` for the first run, and a
//! plot-ready `rtt.csv` for the same run.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{compute, rtt_series};
use super::sweep::{Aggregate, RunResult};
use crate::engine::trace::TraceError;
use crate::engine::Trace;

pub const METRICS_FILE: &str = "metrics.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const RTT_FILE: &str = "rtt.csv";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub seeds: Vec<u64>,
    pub aggregates: Vec<Aggregate>,
    /// Per-run metrics in job order; `trace.csv` belongs to `runs[0]`.
    pub runs: Vec<RunResult>,
}

impl Report {
    pub fn new(seeds: Vec<u64>, runs: Vec<RunResult>) -> Self {
        Report { seeds, aggregates: super::sweep::aggregate(&runs), runs }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path).map(BufWriter::new).map_err(|source| OutputError::Io { path: path.into(), source })
}

/// Writes the report, plus the trace and RTT series of `trace` if given.
/// Returns the paths written.
pub fn write_outputs(dir: &Path, report: &Report, trace: Option<&Trace>) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })?;
    let mut written = Vec::new();

    let path = dir.join(METRICS_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|source| OutputError::Json { path: path.clone(), source })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    written.push(path);

    if let Some(trace) = trace {
        let path = dir.join(TRACE_FILE);
        trace.write_csv(create(&path)?).map_err(|source| OutputError::Trace { path: path.clone(), source })?;
        written.push(path);

        let path = dir.join(RTT_FILE);
        let io = |source| OutputError::Io { path: path.clone(), source };
        let mut w = create(&path)?;
        writeln!(w, "consumer,producer,seq,sent_ms,rtt_ms,probe").map_err(io)?;
        for s in rtt_series(trace) {
            writeln!(w, "{},{},{},{},{},{}", s.consumer, s.tag, s.seq, s.sent_ms, s.rtt_ms, s.probe).map_err(io)?;
        }
        w.flush().map_err(io)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(path: &Path) -> Result<Report, OutputError> {
    let f = File::open(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| OutputError::Json { path: path.into(), source })
}

pub fn read_trace(path: &Path) -> Result<Trace, OutputError> {
    let f = File::open(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
    Trace::read_csv(BufReader::new(f)).map_err(|source| OutputError::Trace { path: path.into(), source })
}

/// Recomputes the first run's metrics from `trace.csv` in `dir` and compares
/// them with the copy saved in `metrics.json`, as serialized JSON text.
pub fn recompute_matches(dir: &Path) -> Result<bool, OutputError> {
    let report = read_report(&dir.join(METRICS_FILE))?;
    let trace = read_trace(&dir.join(TRACE_FILE))?;
    let Some(first) = report.runs.first() else {
        return Ok(false);
    };
    let path = dir.join(METRICS_FILE);
    let json = |m| serde_json::to_string(m).map_err(|source| OutputError::Json { path: path.clone(), source });
    Ok(json(&first.metrics)? == json(&compute(&trace))?)
}
