use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{MobileSpec, MobilitySpec, ScenarioConfig};
use super::world::{run_repetition, LogTargets, RunResult};
use crate::kernel::NodeId;
use crate::power::{mean, sample_sd, NodeMetrics};

pub const THREADS_ENV: &str = "LLNSIM_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory receiving repetition 0's logs, when any log flag is set.
    pub log_dir: Option<PathBuf>,
    /// Worker threads; `Some(0)` or `Some(1)` run serially.
    pub threads: Option<usize>,
}

impl RunOptions {
    /// Thread cap taken from the environment, if set and numeric.
    pub fn threads_from_env() -> Option<usize> {
        std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
    }
}

/// All repetitions of one configuration.
#[derive(Debug, Clone)]
pub struct RunResultSet {
    pub cfg: ScenarioConfig,
    pub runs: Vec<RunResult>,
    /// One diagnostic per aborted repetition.
    pub failures: Vec<String>,
}

impl RunResultSet {
    pub fn rows(&self) -> impl Iterator<Item = &NodeMetrics> {
        self.runs.iter().flat_map(|r| r.metrics.iter())
    }

    /// Per-repetition average over nodes of `metric`.
    pub fn network_means(&self, metric: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| {
                let xs: Vec<f64> = r.metrics.iter().filter_map(|m| lookup(m, metric)).collect();
                mean(&xs)
            })
            .collect()
    }

    pub fn mean_of(&self, metric: &str) -> Option<f64> {
        mean(&self.network_means(metric))
    }
}

pub fn lookup(m: &NodeMetrics, metric: &str) -> Option<f64> {
    m.metrics().into_iter().find(|(k, _)| *k == metric).and_then(|(_, v)| v)
}

pub fn metric_names() -> Vec<&'static str> {
    crate::power::NodeMetrics::metric_names()
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> RunResultSet {
    let reps: Vec<u32> = (0..cfg.repetitions).collect();
    let one = |rep: u32| {
        let logs = match (&opts.log_dir, rep) {
            (Some(d), 0) => LogTargets::in_dir(d, cfg.logs),
            _ => LogTargets::default(),
        };
        run_repetition(cfg, rep, &logs)
    };
    let threads = opts.threads.or_else(RunOptions::threads_from_env);
    let results: Vec<_> = match threads {
        Some(0) | Some(1) => reps.into_iter().map(one).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| reps.into_par_iter().map(one).collect()),
            Err(_) => reps.into_iter().map(one).collect(),
        },
        None => reps.into_par_iter().map(one).collect(),
    };
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => failures.push(e.to_string()),
        }
    }
    RunResultSet {
        cfg: cfg.clone(),
        runs,
        failures,
    }
}

/// One scenario per density; repetition `r` shares its seed streams across densities.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    densities: &[usize],
    mut opts_for: impl FnMut(usize) -> RunOptions,
) -> Vec<(usize, RunResultSet)> {
    densities
        .iter()
        .map(|&d| {
            let c = ScenarioConfig {
                n_nodes: d,
                ..cfg.clone()
            };
            (d, run_scenario(&c, &opts_for(d)))
        })
        .collect()
}

/// The static arm and mobile arm derived from one base config.
pub fn arms(cfg: &ScenarioConfig) -> (ScenarioConfig, ScenarioConfig) {
    let stat = ScenarioConfig {
        mobility: MobilitySpec::Static,
        ..cfg.clone()
    };
    let mobile = match &cfg.mobility {
        MobilitySpec::Static => ScenarioConfig {
            mobility: MobilitySpec::Mobile(MobileSpec {
                model: Default::default(),
                applies_to: Default::default(),
            }),
            ..cfg.clone()
        },
        MobilitySpec::Mobile(_) => cfg.clone(),
    };
    (stat, mobile)
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("arms cover different densities: static {0:?}, mobile {1:?}")]
    Densities(Vec<usize>, Vec<usize>),
    #[error("density {density}: static has {a} repetitions, mobile {b}")]
    Repetitions { density: usize, a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub density: usize,
    pub metric: &'static str,
    pub static_value: Option<f64>,
    pub mobile_value: Option<f64>,
    pub delta: Option<f64>,
    /// Absent when the static value is zero or missing.
    pub pct: Option<f64>,
}

pub fn pct_delta(a: f64, b: f64) -> Option<f64> {
    (a != 0.0).then(|| (b - a) / a * 100.0)
}

pub fn compare(
    stat: &[(usize, RunResultSet)],
    mobile: &[(usize, RunResultSet)],
) -> Result<Vec<ComparisonRow>, CompareError> {
    let da: Vec<usize> = stat.iter().map(|x| x.0).collect();
    let db: Vec<usize> = mobile.iter().map(|x| x.0).collect();
    if da != db {
        return Err(CompareError::Densities(da, db));
    }
    let mut rows = Vec::new();
    for ((d, a), (_, b)) in stat.iter().zip(mobile) {
        if a.runs.len() != b.runs.len() {
            return Err(CompareError::Repetitions {
                density: *d,
                a: a.runs.len(),
                b: b.runs.len(),
            });
        }
        for metric in metric_names() {
            let (x, y) = (a.mean_of(metric), b.mean_of(metric));
            let delta = x.zip(y).map(|(x, y)| y - x);
            let pct = x.zip(y).and_then(|(x, y)| pct_delta(x, y));
            rows.push(ComparisonRow {
                density: *d,
                metric,
                static_value: x,
                mobile_value: y,
                delta,
                pct,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub density: usize,
    /// `network` rows average nodes first; `node` rows follow one node id.
    pub scope: &'static str,
    pub node: Option<NodeId>,
    pub metric: &'static str,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

pub fn aggregate(density: usize, set: &RunResultSet) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for metric in metric_names() {
        let xs = set.network_means(metric);
        rows.push(AggregateRow {
            density,
            scope: "network",
            node: None,
            metric,
            mean: mean(&xs),
            sd: sample_sd(&xs),
            n: xs.len(),
        });
    }
    let mut per_node: BTreeMap<NodeId, Vec<&NodeMetrics>> = BTreeMap::new();
    for m in set.rows() {
        per_node.entry(m.node).or_default().push(m);
    }
    for (node, ms) in per_node {
        for metric in metric_names() {
            let xs: Vec<f64> = ms.iter().filter_map(|m| lookup(m, metric)).collect();
            rows.push(AggregateRow {
                density,
                scope: "node",
                node: Some(node),
                metric,
                mean: mean(&xs),
                sd: sample_sd(&xs),
                n: xs.len(),
            });
        }
    }
    rows
}
