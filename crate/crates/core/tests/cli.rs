use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "time_ms,event,node,packet_kind,name,nonce,hop_from,hop_to,cause";

fn simrun(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simrun"));
    cmd.args(args).env_remove("SIM_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn simrun")
}

fn scenario(dir: &Path, body: &str) -> String {
    let p = dir.join("s.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn writes_metrics_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), "[run]\nduration_s = 8\nseed = 4\n");
    let out = tmp.path().join("results");
    let o = simrun(&["--scenario", &s, "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(HEADER));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["aggregates"][0]["strategy"], "proposed");
    assert_eq!(json["runs"].as_array().unwrap().len(), 1);

    let v = simrun(&["--verify", out.to_str().unwrap()], &[]);
    assert!(v.status.success());
}

#[test]
fn no_trace_and_compare_all() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let s = scenario(tmp.path(), "[run]\nduration_s = 5\n");
    let o = simrun(&["--scenario", &s, "--compare", "all", "--seeds", "2", "--no-trace", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(!out.join("trace.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["aggregates"].as_array().unwrap().len(), 4);
    assert_eq!(json["runs"].as_array().unwrap().len(), 8);
    let table = String::from_utf8(o.stdout).unwrap();
    for id in ["proposed", "no_management", "interest_forwarding", "zone_flooding"] {
        assert!(table.contains(id), "{table}");
    }
}

#[test]
fn sweep_gives_one_row_per_q() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let s = scenario(tmp.path(), "[run]\nduration_s = 5\n");
    let o = simrun(&["--scenario", &s, "--sweep-accuracy", "0.5,0.75,1.0", "--no-trace", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let qs: Vec<f64> = json["aggregates"].as_array().unwrap().iter().map(|a| a["q"].as_f64().unwrap()).collect();
    assert_eq!(qs, vec![0.5, 0.75, 1.0]);
}

#[test]
fn sim_seed_overrides_scenario_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), "[run]\nduration_s = 20\nseed = 1\n");
    let trace = |env: &[(&str, &str)], name: &str| {
        let out = tmp.path().join(name);
        assert!(simrun(&["--scenario", &s, "--out", out.to_str().unwrap()], env).status.success());
        fs::read_to_string(out.join("trace.csv")).unwrap()
    };
    let base = trace(&[], "a");
    assert_eq!(trace(&[("SIM_SEED", "1")], "b"), base);
    assert_ne!(trace(&[("SIM_SEED", "2")], "c"), base);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(simrun(&["--scenario", missing.to_str().unwrap()], &[]).status.code(), Some(2));

    let bad = scenario(tmp.path(), "[run]\naccuracy = { forced = 2.0 }\n");
    let o = simrun(&["--scenario", &bad], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1]"));

    let out = tmp.path().join("r");
    let abort = scenario(tmp.path(), "[run]\nevent_limit = 3\n");
    assert_eq!(simrun(&["--scenario", &abort, "--out", out.to_str().unwrap()], &[]).status.code(), Some(3));

    assert_eq!(simrun(&["--out", out.to_str().unwrap()], &[("SIM_SEED", "x")]).status.code(), Some(2));
}

#[test]
fn shipped_scenarios_load() {
    use ndn_mobility::engine::SimConfig;
    use ndn_mobility::harness::Scenario;

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);

    // The annotated file spells out the defaults.
    let s = Scenario::load(&dir.join("table1.toml")).unwrap();
    let mut want = SimConfig { duration_s: 60.0, ..SimConfig::default() };
    want.topology.delay_preset = Some("table1".into());
    assert_eq!(s.sim_config(), want);
    assert_eq!(s.seeds().len(), 100);
}
