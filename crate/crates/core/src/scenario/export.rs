use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{aggregate, AggregateRow, ComparisonRow, RunResultSet};
use crate::mobility::{write_traces_to, MobilityTrace};
use crate::power::{format_opt, NODES_CSV_HEADER};

pub const AGGREGATE_CSV_HEADER: &str = "density,scope,node,metric,mean,sd,n";
pub const COMPARISON_CSV_HEADER: &str = "density,metric,static,mobile,delta,pct";

/// What was run, with the fully defaulted configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub densities: Vec<usize>,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ScenarioConfig, densities: Vec<usize>) -> Self {
        Manifest {
            tool: "llnsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            densities,
            config: cfg.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        s.push('\n');
        fs::write(path, s)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn nodes_csv(set: &RunResultSet) -> String {
    let mut s = String::with_capacity(128 * set.cfg.n_nodes * set.runs.len().max(1));
    s.push_str(NODES_CSV_HEADER);
    s.push('\n');
    for m in set.rows() {
        s.push_str(&m.csv_row());
        s.push('\n');
    }
    s
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from(AGGREGATE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let node = r.node.map(|n| n.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.density,
            r.scope,
            node,
            r.metric,
            format_opt(r.mean),
            format_opt(r.sd),
            r.n
        ));
    }
    s
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(COMPARISON_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.density,
            r.metric,
            format_opt(r.static_value),
            format_opt(r.mobile_value),
            format_opt(r.delta),
            format_opt(r.pct)
        ));
    }
    s
}

pub fn write_trace_dir(dir: &Path, traces: &[MobilityTrace]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for t in traces {
        write_traces_to(&dir.join(format!("node_{}.movements", t.node_id)), std::slice::from_ref(t))?;
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(body.as_bytes())?;
    w.flush()
}

/// Writes `nodes.csv`, `aggregate.csv`, `manifest.json` and repetition 0's traces.
pub fn export_set(dir: &Path, command: &str, set: &RunResultSet) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    write_file(&dir.join("nodes.csv"), &nodes_csv(set))?;
    write_file(
        &dir.join("aggregate.csv"),
        &aggregate_csv(&aggregate(set.cfg.n_nodes, set)),
    )?;
    Manifest::new(command, &set.cfg, vec![set.cfg.n_nodes]).write(&dir.join("manifest.json"))?;
    if let Some(r0) = set.runs.iter().find(|r| r.rep == 0) {
        write_trace_dir(&dir.join("traces"), &r0.traces)?;
    }
    Ok(())
}

pub fn export_comparison(path: &Path, rows: &[ComparisonRow]) -> std::io::Result<()> {
    write_file(path, &comparison_csv(rows))
}

pub fn export_aggregate(path: &Path, sets: &[(usize, RunResultSet)]) -> std::io::Result<()> {
    let rows: Vec<AggregateRow> = sets.iter().flat_map(|(d, s)| aggregate(*d, s)).collect();
    write_file(path, &aggregate_csv(&rows))
}
