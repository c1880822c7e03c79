//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use llnsim::kernel::rng::stream;
use llnsim::kernel::{Purpose, SimTime, StreamId};
use llnsim::mobility::*;
use llnsim::power::{energy_mj, PowerLedger, PowerModel};
use llnsim::rpl::{Action, Body, ControlMsg, NodeRole, Ocp, RplConfig, RplNode, RplTimer};
use llnsim::scenario::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn serial() -> RunOptions {
    RunOptions {
        log_dir: None,
        threads: None,
    }
}

fn totals(set: &RunResultSet) -> Vec<f64> {
    set.network_means("total_mJ")
}

fn control(set: &RunResultSet) -> Vec<u64> {
    set.runs.iter().map(|r| r.metrics.iter().map(|m| m.dio + m.dao).sum()).collect()
}

/// The 50-node paired arms, shared by the first three criteria.
struct Paired {
    stat: RunResultSet,
    mobile: RunResultSet,
    secs: f64,
}

fn paired() -> Paired {
    let t = Instant::now();
    let base = ScenarioConfig {
        n_nodes: 50,
        ..Default::default()
    };
    let (s, m) = arms(&base);
    let stat = run_scenario(&s, &serial());
    let mobile = run_scenario(&m, &serial());
    Paired {
        stat,
        mobile,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn mobility_increases_power(p: &Paired) -> Outcome {
    if !p.stat.failures.is_empty() || !p.mobile.failures.is_empty() {
        return outcome(false, format!("aborted repetitions: {:?} {:?}", p.stat.failures, p.mobile.failures));
    }
    let a = totals(&p.stat);
    let b = totals(&p.mobile);
    let ma = a.iter().sum::<f64>() / a.len() as f64;
    let mb = b.iter().sum::<f64>() / b.len() as f64;
    let pct = (mb - ma) / ma * 100.0;
    let positive = a.iter().zip(&b).filter(|(x, y)| y > x).count();
    outcome(
        a.len() == 20 && b.len() == 20 && pct >= 10.0 && positive >= 18,
        format!(
            "static {ma:.1} mJ, mobile {mb:.1} mJ, {pct:+.2}%, mobile higher in {positive}/{} pairs, {:.0} s",
            a.len(),
            p.secs
        ),
    )
}

fn density_increases_power(p: &Paired) -> Outcome {
    let t = Instant::now();
    let (_, m) = arms(&ScenarioConfig::default());
    let mut means = Vec::new();
    for (d, set) in run_sweep(&m, &[20, 30, 40], |_| serial()) {
        if !set.failures.is_empty() {
            return outcome(false, format!("d{d} aborted: {:?}", set.failures));
        }
        means.push((d, set.mean_of("total_mJ").unwrap()));
    }
    means.push((50, p.mobile.mean_of("total_mJ").unwrap()));
    let monotone = means.windows(2).all(|w| w[1].1 >= w[0].1);
    let rise = (means[3].1 - means[0].1) / means[0].1 * 100.0;
    let shown: Vec<String> = means.iter().map(|(d, e)| format!("{d}:{e:.1}")).collect();
    outcome(
        monotone && rise >= 5.0,
        format!(
            "mobile mean mJ {}, 20->50 {rise:+.2}%, nondecreasing {monotone}, {:.0} s",
            shown.join(" "),
            t.elapsed().as_secs_f64() + p.secs / 2.0
        ),
    )
}

fn control_overhead(p: &Paired) -> Outcome {
    let a = control(&p.stat);
    let b = control(&p.mobile);
    let worse: Vec<usize> = a.iter().zip(&b).enumerate().filter(|(_, (x, y))| y < x).map(|(i, _)| i).collect();
    let ma = a.iter().sum::<u64>() as f64 / a.len() as f64;
    let mb = b.iter().sum::<u64>() as f64 / b.len() as f64;
    outcome(
        worse.is_empty() && a.len() == b.len() && !a.is_empty(),
        format!("mean DIO+DAO static {ma:.0}, mobile {mb:.0}, repetitions with mobile below static {worse:?}"),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn power_formula() -> Outcome {
    let m = PowerModel::default();
    let sec = SimTime::from_secs(1.0).ticks();
    let tx = energy_mj(
        &PowerLedger {
            tx_ticks: sec,
            ..Default::default()
        },
        &m,
    );
    let lpm = energy_mj(
        &PowerLedger {
            lpm_ticks: sec,
            ..Default::default()
        },
        &m,
    );
    let zero = energy_mj(&PowerLedger::default(), &m);
    let ok = rel(tx.total, 58.5) <= 1e-9 && rel(lpm.total, 0.16350) <= 1e-9 && zero.total == 0.0;
    outcome(ok, format!("1 s transmit {} mJ, 1 s lpm {} mJ, empty {} mJ", tx.total, lpm.total, zero.total))
}

fn ledger_partition() -> Outcome {
    let mut r = stream(2024, StreamId::new(Purpose::Scratch, 0));
    let models = [
        ModelConfig::Rwp(RwpConfig::default()),
        ModelConfig::Rw(RwConfig::default()),
        ModelConfig::Rdm(RdmConfig::default()),
        ModelConfig::Gm(GmConfig::default()),
        ModelConfig::Prw(PrwConfig::default()),
        ModelConfig::Bsa(BsaConfig::default()),
        ModelConfig::Csm(CsmConfig::default()),
    ];
    let modes = [llnsim::radio::RdcMode::Lpl, llnsim::radio::RdcMode::Lpt, llnsim::radio::RdcMode::AlwaysOn];
    let mut nodes = 0;
    let mut bad = Vec::new();
    for case in 0..12 {
        let mut cfg = ScenarioConfig {
            n_nodes: r.random_range(3..30),
            n_sinks: r.random_range(1..3),
            duration: 600.0,
            repetitions: 1,
            seed: r.random(),
            data_period: r.random_range(5.0..90.0),
            app_start: r.random_range(0.0..120.0),
            ..Default::default()
        };
        cfg.radio.rdc.mode = modes[r.random_range(0..modes.len())];
        if case % 4 != 0 {
            cfg.mobility = MobilitySpec::Mobile(MobileSpec {
                model: models[r.random_range(0..models.len())].clone(),
                applies_to: if r.random_bool(0.5) { AppliesTo::All } else { AppliesTo::SendersOnly },
            });
        }
        let elapsed = cfg.t_end().ticks();
        let set = run_scenario(&cfg, &serial());
        if !set.failures.is_empty() {
            bad.push(format!("case {case}: {:?}", set.failures));
            continue;
        }
        for (i, l) in set.runs[0].ledgers.iter().enumerate() {
            nodes += 1;
            if l.cpu_ticks + l.lpm_ticks != elapsed || l.tx_ticks + l.listen_ticks + l.off_ticks != elapsed {
                bad.push(format!("case {case} node {i}: {l:?}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("12 fuzzed 600 s runs, {nodes} node ledgers, violations {bad:?}"))
}

fn constant_trace(node: u32, v: (f64, f64), t: f64) -> MobilityTrace {
    let start = Pos::new(1000.0, 1000.0);
    let mut tr = MobilityTrace::stationary(node, start, SimTime::from_secs(t));
    tr.waypoints[1].pos = Pos::new(start.x + v.0 * t, start.y + v.1 * t);
    tr
}

fn mobility_metric_oracle() -> Outcome {
    let vs = [(3.0, 4.0), (0.0, 0.0), (-1.0, 2.0), (0.5, -0.5), (2.5, 1.0)];
    let horizon = SimTime::from_secs(100.0);
    let ts: Vec<_> = vs.iter().enumerate().map(|(i, &v)| constant_trace(i as u32, v, 100.0)).collect();
    let mut sum = 0.0;
    let mut pairs = 0.0;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            sum += (vs[i].0 - vs[j].0).hypot(vs[i].1 - vs[j].1);
            pairs += 1.0;
        }
    }
    let expected = sum / pairs;
    let dt = SimTime::from_secs(1.0);
    let m1 = mobility_metric(&ts, horizon, dt).unwrap();
    let m2 = mobility_metric(&ts, horizon, SimTime::from_ticks(dt.ticks() / 2)).unwrap();
    let (e1, e2) = (rel(m1, expected), rel(m1, m2));
    outcome(e1 < 1e-6 && e2 < 1e-6, format!("{m1} vs closed form {expected} (rel {e1:.1e}), halved step rel {e2:.1e}"))
}

fn rwp_statistics() -> Outcome {
    let cfg = RwpConfig {
        v_min: 0.0,
        v_max: 2.0,
        t_pause: 0.0,
    };
    let area = AreaBounds {
        width: 200.0,
        height: 200.0,
    };
    let mut r = stream(11, StreamId::new(Purpose::Mobility, 0));
    let n = 100_000;
    let mean = RwpLegs::new(&cfg, area, &mut r).take(n).map(|l| l.speed).sum::<f64>() / n as f64;
    let err = rel(mean, 0.5 * cfg.v_max);
    outcome(err < 0.02, format!("mean leg speed {mean:.4} over {n} legs, target {}, rel {err:.4}", 0.5 * cfg.v_max))
}

fn dodag_invariants(p: &Paired) -> Outcome {
    let mut changes = 0;
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut r = stream(77, StreamId::new(Purpose::Scratch, 1));
    for _ in 0..8 {
        let n = r.random_range(5..40);
        let base = ScenarioConfig {
            n_nodes: n,
            duration: 900.0,
            repetitions: 1,
            seed: r.random(),
            ..Default::default()
        };
        let (_, m) = arms(&base);
        let set = run_scenario(&m, &serial());
        bad.extend(set.failures.iter().cloned());
        for run in &set.runs {
            changes += run.topology_changes;
            checks += run.invariant_checks;
        }
    }
    bad.extend(p.mobile.failures.iter().cloned());
    for run in &p.mobile.runs {
        changes += run.topology_changes;
        checks += run.invariant_checks;
    }
    outcome(
        bad.is_empty() && changes >= 1000,
        format!("{changes} topology changes over {checks} live checks, violations {bad:?}"),
    )
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

fn bfs_oracle() -> Outcome {
    // sparse enough that CCA never gives up on a busy channel; traffic starts once the DODAG has formed
    let mut cfg = ScenarioConfig {
        n_nodes: 15,
        area: AreaBounds {
            width: 300.0,
            height: 300.0,
        },
        duration: 2400.0,
        app_start: 600.0,
        repetitions: 1,
        ..Default::default()
    };
    cfg.rpl.ocp = Ocp::Of0;
    let (ps, want) = (1..)
        .map(|seed| {
            cfg.seed = seed;
            let ps = place_nodes(&cfg, 0);
            let want = bfs(&ps, cfg.radio.udgm.tx_range);
            (ps, want)
        })
        .find(|(_, w)| w.iter().all(Option::is_some) && w.iter().flatten().max() >= Some(&3))
        .unwrap();
    cfg.positions = Some(ps);
    let set = run_scenario(&cfg, &serial());
    if !set.failures.is_empty() {
        return outcome(false, format!("aborted: {:?}", set.failures));
    }
    let run = &set.runs[0];
    let mut wrong = Vec::new();
    let (mut sent, mut delivered) = (0, 0);
    for i in 1..cfg.n_nodes {
        if run.last_hops[i].map(u32::from) != want[i] {
            wrong.push((i, run.last_hops[i], want[i]));
        }
        sent += run.metrics[i].sent;
        delivered += run.metrics[i].delivered;
    }
    let depth = want.iter().flatten().max().unwrap();
    outcome(
        wrong.is_empty() && sent == delivered && sent > 0,
        format!(
            "{} nodes, depth {depth}, seed {}, hop mismatches {wrong:?}, delivered {delivered}/{sent}",
            cfg.n_nodes,
            cfg.seed
        ),
    )
}

fn trickle_law() -> Outcome {
    let cfg = RplConfig::default();
    let mut node = RplNode::new(0, NodeRole::Sink, &cfg, 5);
    let mut timers: BTreeMap<RplTimer, SimTime> = BTreeMap::new();
    let apply = |out: &mut Vec<Action>, timers: &mut BTreeMap<RplTimer, SimTime>| {
        for a in out.drain(..) {
            match a {
                Action::SetTimer { timer, at } => {
                    timers.insert(timer, at);
                }
                Action::CancelTimer(timer) => {
                    timers.remove(&timer);
                }
                _ => {}
            }
        }
    };
    let mut out = Vec::new();
    node.start(SimTime::ZERO, &mut out);
    apply(&mut out, &mut timers);
    let intervals = cfg.doublings as usize + 4;
    let mut now = SimTime::ZERO;
    while node.trickle().history().len() < intervals {
        let Some((&timer, &at)) = timers.iter().min_by_key(|(_, at)| **at) else { break };
        timers.remove(&timer);
        now = at;
        node.on_timer(timer, now, &mut out);
        apply(&mut out, &mut timers);
    }
    let i_min = cfg.i_min_time().ticks();
    let got: Vec<u64> = node.trickle().history().iter().map(|i| i.ticks()).collect();
    let want: Vec<u64> = (0..intervals).map(|k| i_min << k.min(cfg.doublings as usize)).collect();
    let before = got.len();
    node.on_receive(1, &Body::Control(ControlMsg::Dis), now, &mut out);
    apply(&mut out, &mut timers);
    let after = node.trickle().history().last().map(|i| i.ticks());
    let reset_ok = node.trickle().history().len() == before + 1 && after == Some(i_min);
    let doublings: Vec<u64> = got.iter().map(|g| g / i_min).collect();
    outcome(
        got == want && reset_ok,
        format!("interval multiples of i_min {doublings:?}, after reset {:?}", after.map(|a| a / i_min)),
    )
}

fn determinism_and_replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut m) = arms(&ScenarioConfig {
        n_nodes: 30,
        duration: 1200.0,
        repetitions: 2,
        ..Default::default()
    });
    m.logs = LogFlags {
        events: true,
        radio: true,
        control: true,
    };
    let opts = RunOptions {
        log_dir: Some(dir.path().to_path_buf()),
        threads: None,
    };
    let first = run_scenario(&m, &opts);
    export_set(dir.path(), "acceptance", &first).unwrap();
    let second = nodes_csv(&run_scenario(
        &ScenarioConfig {
            logs: LogFlags::default(),
            ..m.clone()
        },
        &serial(),
    ));
    let identical = nodes_csv(&first) == second;
    let replayed = match replay(dir.path()) {
        Ok(r) => r.matches(),
        Err(e) => return outcome(false, format!("replay failed: {e}")),
    };
    outcome(
        identical && replayed && first.failures.is_empty(),
        format!("30 nodes mobile, byte-identical nodes.csv {identical}, replay equals live report {replayed}"),
    )
}

fn performance() -> Outcome {
    let cfg = ScenarioConfig {
        repetitions: 1,
        ..Default::default()
    };
    let t = Instant::now();
    let set = run_scenario(&cfg, &serial());
    let secs = t.elapsed().as_secs_f64();
    outcome(
        secs < 60.0 && set.failures.is_empty(),
        format!("50 nodes, 1 simulated hour, {secs:.2} s wall clock, {} events", set.runs[0].events),
    )
}

fn main() {
    // cargo passes harness flags such as --nocapture; listing must not run anything
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let p = paired();
    let results = [
        mobility_increases_power(&p),
        density_increases_power(&p),
        control_overhead(&p),
        power_formula(),
        ledger_partition(),
        mobility_metric_oracle(),
        rwp_statistics(),
        dodag_invariants(&p),
        bfs_oracle(),
        trickle_law(),
        determinism_and_replay(),
        performance(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("{} criterion {}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
