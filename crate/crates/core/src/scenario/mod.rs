//! Scenario configuration, repetition orchestration, export and replay.

mod config;
mod export;
mod replay;
mod run;
mod world;

pub use config::{load_config, AppliesTo, ConfigError, CpuCost, LogFlags, MobileSpec, MobilitySpec, RadioSection, ScenarioConfig};
pub use export::{
    aggregate_csv, comparison_csv, export_aggregate, export_comparison, export_set, nodes_csv, write_trace_dir,
    Manifest, AGGREGATE_CSV_HEADER, COMPARISON_CSV_HEADER,
};
pub use replay::{replay, ReplayError, ReplayReport};
pub use run::{
    aggregate, arms, compare, lookup, metric_names, pct_delta, run_scenario, run_sweep, AggregateRow, CompareError,
    ComparisonRow, RunOptions, RunResultSet, THREADS_ENV,
};
pub use world::{
    build_traces, charges_event_cpu, check_dodag, node_metrics, place_nodes, role_of, run_repetition, LogTargets,
    RunError, RunResult, WorldEvent, WorldFault,
};
