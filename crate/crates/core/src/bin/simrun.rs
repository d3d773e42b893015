//! `simrun`: run a scenario file and write `metrics.json` and `trace.csv`.
//!
//! Exit status: 0 ok, 1 output failure, 2 bad or unreadable config,
//! 3 simulation abort.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use ndn_mobility::harness::io::recompute_matches;
use ndn_mobility::harness::{plan, run_jobs, write_outputs, Exec, Report, Scenario, Seeds};
use ndn_mobility::strategy::StrategyId;

#[derive(Parser, Debug)]
#[command(name = "simrun", version, about = "Run producer-mobility simulations")]
struct Args {
    /// Scenario TOML file. Built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Seed count (consecutive from the scenario seed) or a comma list.
    #[arg(long)]
    seeds: Option<Seeds>,
    /// proposed | no_management | interest_forwarding | zone_flooding
    #[arg(long)]
    strategy: Option<StrategyId>,
    /// Forced prediction accuracies, e.g. `0.5,0.75,1.0`.
    #[arg(long, value_delimiter = ',')]
    sweep_accuracy: Option<Vec<f64>>,
    /// Strategy ids separated by commas, or `all`.
    #[arg(long, value_parser = parse_compare)]
    compare: Option<StrategyList>,
    /// Write trace.csv and rtt.csv for the first run (default).
    #[arg(long, overrides_with = "no_trace")]
    trace: bool,
    /// Skip the per-event files.
    #[arg(long = "no-trace")]
    no_trace: bool,
    /// Check that metrics.json in this directory is reproduced by its
    /// trace.csv, then exit.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["scenario", "compare", "sweep_accuracy"])]
    verify: Option<PathBuf>,
    /// Run replicates one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone)]
struct StrategyList(Vec<StrategyId>);

fn parse_compare(s: &str) -> Result<StrategyList, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(StrategyList(StrategyId::ALL.to_vec()));
    }
    s.split(',').map(|p| p.parse::<StrategyId>().map_err(|e| e.to_string())).collect::<Result<_, _>>().map(StrategyList)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("simrun: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(dir) = &args.verify {
        return match recompute_matches(dir) {
            Ok(true) => {
                println!("metrics.json reproduced from trace.csv");
                ExitCode::SUCCESS
            }
            Ok(false) => fail(1, "metrics.json differs from metrics recomputed from trace.csv"),
            Err(e) => fail(2, e),
        };
    }

    let mut scenario = match &args.scenario {
        Some(path) => match Scenario::load(path) {
            Ok(s) => s,
            Err(e) => return fail(2, e),
        },
        None => Scenario::default(),
    };
    if let Ok(v) = std::env::var("SIM_SEED") {
        match v.trim().parse() {
            Ok(seed) => scenario.run.seed = seed,
            Err(_) => return fail(2, format!("SIM_SEED must be an unsigned integer, got `{v}`")),
        }
    }
    if let Some(seeds) = args.seeds.clone() {
        scenario.run.seeds = Some(seeds);
    }
    if let Some(id) = args.strategy {
        scenario.run.strategy = id;
        scenario.run.compare.clear();
    }
    if let Some(list) = &args.compare {
        scenario.run.compare = list.0.clone();
    }
    if let Some(qs) = &args.sweep_accuracy {
        scenario.run.sweep_accuracy = qs.clone();
    }
    if let Err(e) = scenario.validate() {
        return fail(2, e);
    }

    let seeds = scenario.seeds();
    let strategies = scenario.strategies();
    let qs: Vec<Option<f64>> = if scenario.run.sweep_accuracy.is_empty() {
        vec![None]
    } else {
        scenario.run.sweep_accuracy.iter().map(|&q| Some(q)).collect()
    };
    let jobs = plan(&strategies, &qs, &seeds);
    let want_trace = !args.no_trace;
    let exec = if args.sequential { Exec::Sequential } else { Exec::default() };

    let started = Instant::now();
    let mut runs = match run_jobs(&scenario.sim_config(), &jobs, exec, |i| want_trace && i == 0) {
        Ok(r) => r,
        Err(e) => return fail(3, format!("simulation aborted: {e}")),
    };
    let elapsed = started.elapsed();
    let trace = runs.first_mut().and_then(|r| r.trace.take());
    let report = Report::new(seeds, runs);

    let written = match write_outputs(&args.out, &report, trace.as_ref()) {
        Ok(w) => w,
        Err(e) => return fail(1, e),
    };

    print_summary(&report);
    println!("{} runs in {:.2} s", report.runs.len(), elapsed.as_secs_f64());
    for p in written {
        println!("wrote {}", p.display());
    }
    ExitCode::SUCCESS
}

fn print_summary(report: &Report) {
    println!(
        "{:<20} {:>5} {:>5} {:>6} {:>5} {:>10} {:>8} {:>8} {:>8} {:>9} {:>7} {:>8}",
        "strategy", "q", "runs", "hand", "drop", "H_p mean", "std", "min", "max", "rtt mean", "c/i", "ctrl/run"
    );
    for a in &report.aggregates {
        let q = a.q.map(|q| format!("{q:.2}")).unwrap_or_else(|| "-".into());
        let h = &a.handover_latency_ms;
        println!(
            "{:<20} {:>5} {:>5} {:>6} {:>5} {:>10.2} {:>8.2} {:>8.2} {:>8.2} {:>9.2} {:>7.4} {:>8.1}",
            a.strategy.as_str(),
            q,
            a.runs,
            a.handovers,
            a.dropped_sessions,
            h.mean,
            h.std,
            h.min,
            h.max,
            a.rtt_ms.mean,
            a.content_to_interest.mean,
            a.control_packets.mean
        );
    }
}
