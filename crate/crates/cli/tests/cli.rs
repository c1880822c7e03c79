use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn llnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llnsim"))
        .args(args)
        .env("LLNSIM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

const SMALL: &str = r#"{"n_nodes": 8, "duration": 300, "repetitions": 2}"#;

#[test]
fn run_writes_reports_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = llnsim(&["run", "--config", &cfg, "--out", &s(&out), "--log-events", "--log-radio", "--log-control"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["nodes.csv", "aggregate.csv", "manifest.json", "events.log", "radio.log", "control.log"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(out.join("nodes.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 * 8);

    let r = llnsim(&["replay", &s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn replay_mismatch_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = llnsim(&["run", "--config", &cfg, "--out", &s(&out), "--log-events", "--log-radio", "--log-control"]);
    assert!(o.status.success());
    let p = out.join("radio.log");
    let text = fs::read_to_string(&p).unwrap();
    fs::write(&p, text.lines().skip(3).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    assert!(!llnsim(&["replay", &s(&out)]).status.success());
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    assert!(llnsim(&["run", "--config", &cfg, "--out", &s(&a)]).status.success());
    assert!(llnsim(&["run", "--config", &cfg, "--out", &s(&b)]).status.success());
    assert!(llnsim(&["run", "--config", &cfg, "--out", &s(&c), "--seed", "99"]).status.success());
    let read = |d: &Path| fs::read_to_string(d.join("nodes.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn sweep_makes_one_directory_per_density() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"duration": 120, "repetitions": 1}"#);
    let out = tmp.path().join("sw");
    let o = llnsim(&["sweep", "--config", &cfg, "--out", &s(&out), "--density", "5,7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("d5/nodes.csv").exists());
    assert!(out.join("d7/nodes.csv").exists());
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.lines().any(|l| l.starts_with("5,network,")));
    assert!(agg.lines().any(|l| l.starts_with("7,network,")));
}

#[test]
fn compare_writes_both_arms_and_deltas() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_nodes": 6, "duration": 200, "repetitions": 2}"#);
    let out = tmp.path().join("cmp");
    let o = llnsim(&["compare", "--config", &cfg, "--out", &s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("static/d6/nodes.csv").exists());
    assert!(out.join("mobile/d6/nodes.csv").exists());
    let text = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("density,metric,static,mobile,delta,pct"));
    let total = text.lines().find(|l| l.starts_with("6,total_mJ,")).unwrap();
    let f: Vec<f64> = total.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
    let pct = (f[1] - f[0]) / f[0] * 100.0;
    assert!((pct - f[3]).abs() <= 1e-4 * pct.abs().max(1.0), "{total}");
}

#[test]
fn gen_trace_writes_movement_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"n_nodes": 4, "duration": 100, "mobility": {"model": {"kind": "rwp"}}}"#,
    );
    let out = tmp.path().join("tr");
    let o = llnsim(&["gen-trace", "--config", &cfg, "--out", &s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..4 {
        let t = fs::read_to_string(out.join(format!("traces/node_{i}.movements"))).unwrap();
        assert!(t.split_whitespace().count() >= 6);
    }
}

#[test]
fn bad_config_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"speeed": 1}"#);
    let o = llnsim(&["run", "--config", &cfg, "--out", &s(&tmp.path().join("x"))]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("speeed"));
    let o = llnsim(&["run", "--config", &s(&tmp.path().join("missing.json"))]);
    assert!(!o.status.success());
}
