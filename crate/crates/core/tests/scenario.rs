use std::collections::{BTreeMap, VecDeque};
use std::fs;

use llnsim::mobility::Pos;
use llnsim::power::{Energy, NodeMetrics};
use llnsim::rpl::{NodeRole, Ocp};
use llnsim::scenario::*;
use proptest::prelude::*;

fn serial() -> RunOptions {
    RunOptions {
        log_dir: None,
        threads: Some(1),
    }
}

fn small(n: usize, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        n_nodes: n,
        duration,
        repetitions: 1,
        ..Default::default()
    }
}

fn line(n: usize, spacing: f64) -> Vec<Pos> {
    (0..n).map(|i| Pos::new(10.0 + spacing * i as f64, 100.0)).collect()
}

fn bfs(ps: &[Pos], range: f64) -> Vec<Option<u32>> {
    let mut d = vec![None; ps.len()];
    d[0] = Some(0);
    let mut q = VecDeque::from([0usize]);
    while let Some(u) = q.pop_front() {
        for v in 0..ps.len() {
            if d[v].is_none() && ps[u].dist(ps[v]) <= range {
                d[v] = Some(d[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    d
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = ScenarioConfig::from_json(r#"{"n_nodes": 20, "seed": 1}"#, "inline").unwrap();
    assert_eq!(cfg.n_nodes, 20);
    assert_eq!(cfg.seed, 1);
    assert_eq!(cfg.n_sinks, 1);
    assert_eq!(cfg.duration, 3600.0);
    assert_eq!(cfg.repetitions, 20);
    assert_eq!(cfg.radio.udgm.tx_range, 100.0);
    assert!(cfg.mobility.is_static());
}

#[test]
fn unknown_key_is_named() {
    let err = ScenarioConfig::from_json(r#"{"n_nodes": 20, "speeed": 3}"#, "inline").unwrap_err();
    assert!(err.to_string().contains("speeed"), "{err}");
}

#[test]
fn unknown_key_inside_mobility_is_named() {
    let text = r#"{"mobility": {"model": {"kind": "rwp", "v_mxa": 2}}}"#;
    let err = ScenarioConfig::from_json(text, "inline").unwrap_err();
    assert!(err.to_string().contains("v_mxa"), "{err}");
}

#[test]
fn sink_count_must_leave_a_sender() {
    let err = ScenarioConfig::from_json(r#"{"n_nodes": 5, "n_sinks": 5}"#, "inline").unwrap_err();
    assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
    assert!(ScenarioConfig::from_json(r#"{"duration": 0}"#, "x").is_err());
    assert!(ScenarioConfig::from_json(r#"{"repetitions": 0}"#, "x").is_err());
}

#[test]
fn load_config_reports_missing_file() {
    let err = load_config(std::path::Path::new("/nonexistent/cfg.json")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }), "{err}");
}

#[test]
fn config_round_trips_through_json() {
    let (_, mobile) = arms(&ScenarioConfig::default());
    let text = serde_json::to_string(&mobile).unwrap();
    assert_eq!(ScenarioConfig::from_json(&text, "x").unwrap(), mobile);
}

#[test]
fn arms_share_placements() {
    let (s, m) = arms(&small(20, 60.0));
    assert!(s.mobility.is_static());
    assert!(!m.mobility.is_static());
    assert_eq!(place_nodes(&s, 3), place_nodes(&m, 3));
    let ts = build_traces(&s, 3).unwrap();
    let tm = build_traces(&m, 3).unwrap();
    for (a, b) in ts.iter().zip(&tm) {
        assert_eq!(a.waypoints[0].pos, b.waypoints[0].pos);
        assert_eq!(a.waypoints.len(), 2);
    }
    assert_ne!(place_nodes(&s, 3), place_nodes(&s, 4));
}

#[test]
fn three_node_line_delivers_everything_at_bfs_depth() {
    let mut cfg = small(3, 900.0);
    cfg.positions = Some(line(3, 80.0));
    cfg.rpl.ocp = Ocp::Of0;
    let set = run_scenario(&cfg, &serial());
    assert!(set.failures.is_empty(), "{:?}", set.failures);
    let run = &set.runs[0];
    assert_eq!(run.last_hops[1], Some(1));
    assert_eq!(run.last_hops[2], Some(2));
    for m in &run.metrics[1..] {
        assert!(m.sent > 0);
        assert_eq!(m.pdr, 1.0, "node {}", m.node);
    }
    assert_eq!(run.metrics[0].role, NodeRole::Sink);
}

#[test]
fn grid_hop_counts_match_bfs() {
    let ps: Vec<Pos> = (0..9).map(|i| Pos::new(20.0 + 70.0 * (i % 3) as f64, 20.0 + 70.0 * (i / 3) as f64)).collect();
    let mut cfg = small(9, 1200.0);
    cfg.positions = Some(ps.clone());
    cfg.rpl.ocp = Ocp::Of0;
    let set = run_scenario(&cfg, &serial());
    assert!(set.failures.is_empty(), "{:?}", set.failures);
    let want = bfs(&ps, cfg.radio.udgm.tx_range);
    let run = &set.runs[0];
    for i in 1..ps.len() {
        assert_eq!(run.last_hops[i].map(u32::from), want[i], "node {i}");
        assert_eq!(run.metrics[i].pdr, 1.0, "node {i}");
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let cfg = ScenarioConfig {
        repetitions: 2,
        ..small(12, 300.0)
    };
    let (_, m) = arms(&cfg);
    let a = nodes_csv(&run_scenario(&m, &serial()));
    let b = nodes_csv(&run_scenario(&m, &RunOptions { log_dir: None, threads: Some(2) }));
    assert_eq!(a, b);
    let other = nodes_csv(&run_scenario(&ScenarioConfig { seed: 2, ..m }, &serial()));
    assert_ne!(a, other);
}

#[test]
fn ledgers_partition_the_run() {
    let (_, m) = arms(&small(15, 600.0));
    let set = run_scenario(&m, &serial());
    let elapsed = m.t_end().ticks();
    for l in &set.runs[0].ledgers {
        assert_eq!(l.cpu_ticks + l.lpm_ticks, elapsed);
        assert_eq!(l.tx_ticks + l.listen_ticks + l.off_ticks, elapsed);
        assert!(l.listen_ticks >= l.cpu_ticks);
    }
}

#[test]
fn logged_run_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut m) = arms(&small(10, 400.0));
    m.logs = LogFlags {
        events: true,
        radio: true,
        control: true,
    };
    let set = run_scenario(
        &m,
        &RunOptions {
            log_dir: Some(dir.path().to_path_buf()),
            threads: Some(1),
        },
    );
    assert!(set.failures.is_empty());
    export_set(dir.path(), "run", &set).unwrap();
    let rep = replay(dir.path()).unwrap();
    assert!(rep.matches(), "live:\n{}\nreplay:\n{}", rep.live_csv, rep.replay_csv);

    let radio = fs::read_to_string(dir.path().join("radio.log")).unwrap();
    let first: Vec<&str> = radio.lines().next().unwrap().split('\t').collect();
    assert_eq!(first.len(), 4);
    assert!(first[0].parse::<u64>().unwrap() <= first[1].parse::<u64>().unwrap());
    assert!(matches!(first[3], "transmit" | "listen"), "{first:?}");
}

#[test]
fn replay_notices_a_tampered_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(6, 200.0);
    cfg.logs = LogFlags {
        events: true,
        radio: true,
        control: true,
    };
    let set = run_scenario(
        &cfg,
        &RunOptions {
            log_dir: Some(dir.path().to_path_buf()),
            threads: Some(1),
        },
    );
    export_set(dir.path(), "run", &set).unwrap();
    let p = dir.path().join("control.log");
    let text = fs::read_to_string(&p).unwrap();
    let cut: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&p, cut).unwrap();
    if let Ok(r) = replay(dir.path()) {
        assert!(!r.matches());
    }
}

#[test]
fn replay_requires_logs() {
    let dir = tempfile::tempdir().unwrap();
    let set = run_scenario(&small(4, 60.0), &serial());
    export_set(dir.path(), "run", &set).unwrap();
    assert!(replay(dir.path()).is_err());
}

#[test]
fn control_counters_match_control_log() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut m) = arms(&small(12, 600.0));
    m.logs.control = true;
    let set = run_scenario(
        &m,
        &RunOptions {
            log_dir: Some(dir.path().to_path_buf()),
            threads: Some(1),
        },
    );
    let text = fs::read_to_string(dir.path().join("control.log")).unwrap();
    let mut counts: BTreeMap<(u32, String), u64> = BTreeMap::new();
    for l in text.lines() {
        let f: Vec<&str> = l.split('\t').collect();
        if f[3] == "sent" {
            *counts.entry((f[1].parse().unwrap(), f[2].to_string())).or_default() += 1;
        }
    }
    let c = |n: u32, k: &str| counts.get(&(n, k.to_string())).copied().unwrap_or(0);
    for r in &set.runs[0].metrics {
        assert_eq!(r.dio, c(r.node, "DIO"), "node {}", r.node);
        assert_eq!(r.dao, c(r.node, "DAO"));
        assert_eq!(r.dis, c(r.node, "DIS"));
        assert_eq!(r.nd_msgs, c(r.node, "RS") + c(r.node, "RA") + c(r.node, "NS") + c(r.node, "NA"));
        assert_eq!(r.sent, c(r.node, "APP"));
    }
}

#[test]
fn exported_files_have_fixed_names() {
    let dir = tempfile::tempdir().unwrap();
    let (_, m) = arms(&ScenarioConfig {
        repetitions: 2,
        ..small(5, 120.0)
    });
    let set = run_scenario(&m, &serial());
    export_set(dir.path(), "run", &set).unwrap();
    for f in ["nodes.csv", "aggregate.csv", "manifest.json", "traces/node_0.movements", "traces/node_4.movements"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let man = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(man.config, m);
    let again = run_scenario(&man.config, &serial());
    assert_eq!(nodes_csv(&again), fs::read_to_string(dir.path().join("nodes.csv")).unwrap());

    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().next(), Some(AGGREGATE_CSV_HEADER));
    let net = agg.lines().find(|l| l.starts_with("5,network,,total_mJ,")).unwrap();
    assert!(net.ends_with(",2"), "{net}");
}

#[test]
fn static_trace_export_has_two_waypoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(3, 60.0);
    let traces = build_traces(&cfg, 0).unwrap();
    write_trace_dir(dir.path(), &traces).unwrap();
    let text = fs::read_to_string(dir.path().join("node_1.movements")).unwrap();
    assert_eq!(text.split_whitespace().count(), 6);
}

fn row(node: u32, total: f64) -> NodeMetrics {
    NodeMetrics {
        rep: 0,
        node,
        role: if node == 0 { NodeRole::Sink } else { NodeRole::Sender },
        energy: Energy {
            cpu: 0.0,
            lpm: 0.0,
            tx: 0.0,
            listen: total,
            total,
        },
        avg_mw: total / 3600.0,
        sent: 0,
        delivered: 0,
        pdr: 1.0,
        avg_hops: None,
        dio: 0,
        dao: 0,
        dis: 0,
        nd_msgs: 0,
        mean_etx: None,
    }
}

fn set_of(totals: &[f64]) -> RunResultSet {
    RunResultSet {
        cfg: ScenarioConfig::default(),
        runs: vec![RunResult::from_rows(totals.iter().enumerate().map(|(i, &t)| row(i as u32, t)).collect())],
        failures: Vec::new(),
    }
}

#[test]
fn compare_reports_paired_percentages() {
    let rows = compare(&[(50, set_of(&[10.0, 10.0]))], &[(50, set_of(&[13.608, 13.608]))]).unwrap();
    let total = rows.iter().find(|r| r.metric == "total_mJ").unwrap();
    assert!((total.pct.unwrap() - 36.08).abs() < 1e-9);
    assert!((total.delta.unwrap() - 3.608).abs() < 1e-12);

    let tx = rows.iter().find(|r| r.metric == "tx_mJ").unwrap();
    assert_eq!(tx.delta, Some(0.0));
    assert_eq!(tx.pct, None);

    let csv = comparison_csv(&rows);
    assert!(csv.contains("50,tx_mJ,0,0,0,\n"), "{csv}");
    assert!(csv.contains("50,total_mJ,10,13.608,3.608,36.08\n"), "{csv}");
}

#[test]
fn identical_arms_have_zero_delta() {
    let rows = compare(&[(20, set_of(&[4.0, 6.0]))], &[(20, set_of(&[4.0, 6.0]))]).unwrap();
    assert!(rows.iter().all(|r| r.delta.is_none() || r.delta == Some(0.0)));
}

#[test]
fn compare_rejects_mismatched_densities() {
    let err = compare(&[(20, set_of(&[1.0]))], &[(30, set_of(&[1.0]))]).unwrap_err();
    assert_eq!(err, CompareError::Densities(vec![20], vec![30]));
}

#[test]
fn aggregate_uses_sample_sd() {
    let mut set = set_of(&[10.0]);
    let mut second = RunResult::from_rows(vec![row(0, 14.0)]);
    second.rep = 1;
    second.metrics[0].rep = 1;
    set.runs.push(second);
    let rows = aggregate(50, &set);
    let total = rows.iter().find(|r| r.scope == "network" && r.metric == "total_mJ").unwrap();
    assert_eq!(total.mean, Some(12.0));
    assert!((total.sd.unwrap() - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(total.n, 2);
    let hops = rows.iter().find(|r| r.scope == "network" && r.metric == "avg_hops").unwrap();
    assert_eq!(hops.n, 0);
    assert_eq!(hops.mean, None);
}

#[test]
fn sweep_matches_single_scenario() {
    let cfg = small(8, 120.0);
    let sweep = run_sweep(&cfg, &[8], |_| serial());
    assert_eq!(sweep.len(), 1);
    assert_eq!(nodes_csv(&sweep[0].1), nodes_csv(&run_scenario(&cfg, &serial())));
}

#[test]
fn two_sinks_both_collect() {
    let mut cfg = small(8, 900.0);
    cfg.n_sinks = 2;
    cfg.positions = Some(vec![
        Pos::new(10.0, 10.0),
        Pos::new(190.0, 190.0),
        Pos::new(40.0, 10.0),
        Pos::new(10.0, 40.0),
        Pos::new(50.0, 50.0),
        Pos::new(160.0, 190.0),
        Pos::new(190.0, 160.0),
        Pos::new(150.0, 150.0),
    ]);
    let set = run_scenario(&cfg, &serial());
    assert!(set.failures.is_empty(), "{:?}", set.failures);
    let run = &set.runs[0];
    assert_eq!(&run.final_parent[2..], &[Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)]);
    for m in &run.metrics[2..] {
        assert!(m.sent > 0);
        assert_eq!(m.delivered, m.sent, "node {}", m.node);
    }
    assert_eq!(run.metrics[1].role, NodeRole::Sink);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn churning_networks_keep_dodag_invariants(seed in 0u64..1_000_000, n in 8usize..25) {
        let base = ScenarioConfig { seed, ..small(n, 600.0) };
        let (_, m) = arms(&base);
        let set = run_scenario(&m, &serial());
        prop_assert!(set.failures.is_empty(), "{:?}", set.failures);
        prop_assert!(set.runs[0].invariant_checks > 0);
    }
}
