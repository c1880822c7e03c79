use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use super::export::{nodes_csv, Manifest};
use super::run::RunResultSet;
use super::world::{charges_event_cpu, node_metrics, RunResult};
use crate::kernel::{EventKind, NodeId, SimTime};
use crate::power::{NodeMetrics, PowerLedger};
use crate::radio::{RadioLedger, RadioState};
use crate::rpl::{ControlKind, EtxEstimator};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("replay needs {0}; rerun with all three log flags")]
    MissingLog(&'static str),
    #[error("{0}")]
    Metrics(String),
}

fn open(path: &Path) -> Result<BufReader<fs::File>, ReplayError> {
    fs::File::open(path).map(BufReader::new).map_err(|source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn lines(path: &Path, file: &'static str) -> Result<Vec<(usize, String)>, ReplayError> {
    if !path.exists() {
        return Err(ReplayError::MissingLog(file));
    }
    open(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.map(|l| (i + 1, l)).map_err(|source| ReplayError::Io {
                path: path.display().to_string(),
                source,
            })
        })
        .collect()
}

fn field<T: std::str::FromStr>(f: Option<&str>, file: &'static str, line: usize, what: &str) -> Result<T, ReplayError> {
    f.and_then(|s| s.parse().ok()).ok_or_else(|| ReplayError::Parse {
        file,
        line,
        message: format!("bad or missing {what}"),
    })
}

/// Outcome of recomputing repetition 0 from its logs.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub rows: Vec<NodeMetrics>,
    pub live_csv: String,
    pub replay_csv: String,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.live_csv == self.replay_csv
    }
}

#[derive(Default, Clone)]
struct Acc {
    cpu: u64,
    ctrl: [u64; 7],
    sent: u64,
    delivered: u64,
    hops: u64,
    etx: Option<EtxEstimator>,
}

/// Recomputes the repetition-0 report in `dir` from `events.log`, `radio.log` and `control.log`.
pub fn replay(dir: &Path) -> Result<ReplayReport, ReplayError> {
    let manifest = Manifest::read(&dir.join("manifest.json")).map_err(|source| ReplayError::Io {
        path: dir.join("manifest.json").display().to_string(),
        source,
    })?;
    let cfg = manifest.config;
    let n = cfg.n_nodes;
    let t_end = cfg.t_end();
    let elapsed = t_end.ticks();
    let msg_cost = SimTime::from_secs(cfg.cpu.message).ticks();
    let event_cost = SimTime::from_secs(cfg.cpu.event).ticks();
    let clamp = |cost: u64, t: u64| cost.min(elapsed.saturating_sub(t));
    let mut acc = vec![
        Acc {
            etx: Some(EtxEstimator::new(cfg.rpl.etx_alpha)),
            ..Default::default()
        };
        n
    ];
    let node_ix = |v: NodeId, file: &'static str, line: usize| -> Result<usize, ReplayError> {
        if (v as usize) < n {
            Ok(v as usize)
        } else {
            Err(ReplayError::Parse {
                file,
                line,
                message: format!("node {v} out of range"),
            })
        }
    };

    for (ln, l) in lines(&dir.join("events.log"), "events.log")? {
        let mut f = l.split('\t');
        let t: u64 = field(f.next(), "events.log", ln, "tick")?;
        let _seq: u64 = field(f.next(), "events.log", ln, "seq")?;
        let target = f.next().unwrap_or("");
        let kind = f.next().and_then(EventKind::parse).ok_or_else(|| ReplayError::Parse {
            file: "events.log",
            line: ln,
            message: "bad event kind".into(),
        })?;
        if target == "world" || !charges_event_cpu(kind) {
            continue;
        }
        let i = node_ix(field(Some(target), "events.log", ln, "target")?, "events.log", ln)?;
        acc[i].cpu += clamp(event_cost, t);
    }

    let mut radio = vec![RadioLedger::default(); n];
    for (ln, l) in lines(&dir.join("radio.log"), "radio.log")? {
        let mut f = l.split('\t');
        let a: u64 = field(f.next(), "radio.log", ln, "start")?;
        let b: u64 = field(f.next(), "radio.log", ln, "end")?;
        let i = node_ix(field(f.next(), "radio.log", ln, "node")?, "radio.log", ln)?;
        let state = f.next().and_then(RadioState::parse).ok_or_else(|| ReplayError::Parse {
            file: "radio.log",
            line: ln,
            message: "bad radio state".into(),
        })?;
        if b < a {
            return Err(ReplayError::Parse { file: "radio.log", line: ln, message: "interval ends before it starts".into() });
        }
        match state {
            RadioState::Transmit => radio[i].tx_ticks += b - a,
            RadioState::Listen => radio[i].listen_ticks += b - a,
        }
    }

    for (ln, l) in lines(&dir.join("control.log"), "control.log")? {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() < 5 {
            return Err(ReplayError::Parse {
                file: "control.log",
                line: ln,
                message: "expected at least five fields".into(),
            });
        }
        let t: u64 = field(Some(f[0]), "control.log", ln, "tick")?;
        let i = node_ix(field(Some(f[1]), "control.log", ln, "node")?, "control.log", ln)?;
        acc[i].cpu += clamp(msg_cost, t);
        let detail: BTreeMap<&str, &str> = f
            .get(5)
            .map(|d| d.split(',').filter_map(|kv| kv.split_once('=')).collect())
            .unwrap_or_default();
        match (f[2], f[3]) {
            ("APP", "sent") => acc[i].sent += 1,
            ("APP", "recv") => {
                let origin = node_ix(field(Some(f[4]), "control.log", ln, "origin")?, "control.log", ln)?;
                let hops: u64 = field(detail.get("hops").copied(), "control.log", ln, "hops")?;
                acc[origin].delivered += 1;
                acc[origin].hops += hops;
            }
            (kind, "sent") => {
                if let Some(k) = ControlKind::parse(kind) {
                    acc[i].ctrl[k.index()] += 1;
                }
                if f[4] != "*" {
                    let peer: NodeId = field(Some(f[4]), "control.log", ln, "peer")?;
                    let tx: u32 = field(detail.get("tx").copied(), "control.log", ln, "tx")?;
                    let ack: u8 = field(detail.get("ack").copied(), "control.log", ln, "ack")?;
                    acc[i].etx.as_mut().expect("initialized").record(peer, tx, ack == 1);
                }
            }
            _ => {}
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut runs = Vec::new();
    for i in 0..n {
        let r = &mut radio[i];
        r.off_ticks = elapsed.checked_sub(r.tx_ticks + r.listen_ticks).ok_or_else(|| {
            ReplayError::Metrics(format!("node {i}: radio-on time exceeds the run length"))
        })?;
        let a = &acc[i];
        let ledger = PowerLedger::finalize(a.cpu, *r, elapsed).map_err(|e| ReplayError::Metrics(e.to_string()))?;
        let m = node_metrics(
            &cfg,
            0,
            i as NodeId,
            &ledger,
            &a.ctrl,
            a.sent,
            a.delivered,
            a.hops,
            a.etx.as_ref().and_then(|e| e.mean()),
        )
        .map_err(|e| ReplayError::Metrics(e.to_string()))?;
        rows.push(m);
    }
    runs.push(RunResult::from_rows(rows.clone()));
    let replay_set = RunResultSet {
        cfg: cfg.clone(),
        runs,
        failures: Vec::new(),
    };
    let replay_csv = nodes_csv(&replay_set);

    let live = fs::read_to_string(dir.join("nodes.csv")).map_err(|source| ReplayError::Io {
        path: dir.join("nodes.csv").display().to_string(),
        source,
    })?;
    let mut live_csv = String::new();
    for (k, l) in live.lines().enumerate() {
        if k == 0 || l.starts_with("0,") {
            live_csv.push_str(l);
            live_csv.push('\n');
        }
    }
    Ok(ReplayReport {
        rows,
        live_csv,
        replay_csv,
    })
}
