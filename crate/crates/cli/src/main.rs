use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use llnsim::power::format_num;
use llnsim::scenario::{
    arms, build_traces, compare, export_aggregate, export_comparison, export_set, load_config, replay,
    run_scenario, run_sweep, write_trace_dir, Manifest, RunOptions, RunResultSet, ScenarioConfig,
};

const DEFAULT_DENSITIES: [usize; 4] = [20, 30, 40, 50];

#[derive(Parser)]
#[command(name = "llnsim", version, about = "RPL low-power lossy network simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every repetition of one scenario.
    Run(Common),
    /// Run the scenario once per density, one `d<N>` directory each.
    Sweep(Common),
    /// Run matched static and mobile arms and write the paired comparison.
    Compare(Common),
    /// Write the mobility traces of one repetition without simulating.
    GenTrace {
        #[command(flatten)]
        common: Common,
        /// Repetition whose placement and mobility streams are used.
        #[arg(long, default_value_t = 0)]
        rep: u32,
    },
    /// Recompute the repetition-0 report of an output directory from its logs.
    Replay {
        /// Output directory of an earlier logged run.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',')]
    density: Vec<usize>,
    #[arg(long)]
    log_events: bool,
    #[arg(long)]
    log_radio: bool,
    #[arg(long)]
    log_control: bool,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.logs.events |= self.log_events;
        cfg.logs.radio |= self.log_radio;
        cfg.logs.control |= self.log_control;
        cfg.validate()?;
        Ok(cfg)
    }

    fn densities(&self, cfg: &ScenarioConfig, fallback: &[usize]) -> Result<Vec<usize>> {
        let ds = if self.density.is_empty() { fallback.to_vec() } else { self.density.clone() };
        for &d in &ds {
            ScenarioConfig { n_nodes: d, ..cfg.clone() }
                .validate()
                .with_context(|| format!("density {d}"))?;
        }
        Ok(ds)
    }
}

fn options(dir: &Path) -> RunOptions {
    RunOptions {
        log_dir: Some(dir.to_path_buf()),
        threads: None,
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn create(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Prints each aborted repetition and returns how many there were.
fn report_failures(label: &str, set: &RunResultSet) -> usize {
    for f in &set.failures {
        eprintln!("{label}: {f}");
    }
    set.failures.len()
}

fn summary(label: &str, set: &RunResultSet) {
    let total = set.mean_of("total_mJ").map_or("-".into(), format_num);
    let pdr = set.mean_of("pdr").map_or("-".into(), format_num);
    println!(
        "{label}: {} nodes, {} repetitions, mean total {total} mJ, mean pdr {pdr}",
        set.cfg.n_nodes,
        set.runs.len()
    );
}

fn sweep_into(dir: &Path, cfg: &ScenarioConfig, densities: &[usize]) -> Result<(Vec<(usize, RunResultSet)>, usize)> {
    let sets = run_sweep(cfg, densities, |d| options(&dir.join(format!("d{d}"))));
    let mut failed = 0;
    for (d, set) in &sets {
        let sub = dir.join(format!("d{d}"));
        create(&sub)?;
        export_set(&sub, &command_line(), set).with_context(|| format!("writing {}", sub.display()))?;
        failed += report_failures(&format!("d{d}"), set);
    }
    export_aggregate(&dir.join("aggregate.csv"), &sets)?;
    Manifest::new(&command_line(), cfg, densities.to_vec()).write(&dir.join("manifest.json"))?;
    Ok((sets, failed))
}

fn run(c: &Common) -> Result<usize> {
    let mut cfg = c.config()?;
    if let Some(&d) = c.density.first() {
        if c.density.len() > 1 {
            bail!("run takes a single density; use sweep for several");
        }
        cfg.n_nodes = d;
        cfg.validate()?;
    }
    create(&c.out)?;
    let set = run_scenario(&cfg, &options(&c.out));
    export_set(&c.out, &command_line(), &set)?;
    summary("run", &set);
    Ok(report_failures("run", &set))
}

fn sweep(c: &Common) -> Result<usize> {
    let cfg = c.config()?;
    let ds = c.densities(&cfg, &DEFAULT_DENSITIES)?;
    create(&c.out)?;
    let (sets, failed) = sweep_into(&c.out, &cfg, &ds)?;
    for (d, set) in &sets {
        summary(&format!("d{d}"), set);
    }
    Ok(failed)
}

fn compare_arms(c: &Common) -> Result<usize> {
    let cfg = c.config()?;
    let ds = c.densities(&cfg, &[cfg.n_nodes])?;
    let (stat, mobile) = arms(&cfg);
    let (a, fa) = sweep_into(&c.out.join("static"), &stat, &ds)?;
    let (b, fb) = sweep_into(&c.out.join("mobile"), &mobile, &ds)?;
    let rows = compare(&a, &b)?;
    export_comparison(&c.out.join("comparison.csv"), &rows)?;
    Manifest::new(&command_line(), &cfg, ds).write(&c.out.join("manifest.json"))?;
    for r in rows.iter().filter(|r| r.metric == "total_mJ") {
        let fmt = |x: Option<f64>| x.map_or("-".into(), format_num);
        println!(
            "d{}: total_mJ static {} mobile {} delta {} ({}%)",
            r.density,
            fmt(r.static_value),
            fmt(r.mobile_value),
            fmt(r.delta),
            fmt(r.pct)
        );
    }
    Ok(fa + fb)
}

fn gen_trace(c: &Common, rep: u32) -> Result<usize> {
    let mut cfg = c.config()?;
    if let Some(&d) = c.density.first() {
        cfg.n_nodes = d;
        cfg.validate()?;
    }
    let traces = build_traces(&cfg, rep)?;
    let dir = c.out.join("traces");
    write_trace_dir(&dir, &traces)?;
    Manifest::new(&command_line(), &cfg, vec![cfg.n_nodes]).write(&c.out.join("manifest.json"))?;
    println!("wrote {} traces to {}", traces.len(), dir.display());
    Ok(0)
}

fn replay_dir(dir: &Path) -> Result<usize> {
    let rep = replay(dir)?;
    if rep.matches() {
        println!("replay matches nodes.csv ({} rows)", rep.rows.len());
        return Ok(0);
    }
    let live: Vec<&str> = rep.live_csv.lines().collect();
    let again: Vec<&str> = rep.replay_csv.lines().collect();
    let mut shown = 0;
    for (i, (a, b)) in live.iter().zip(&again).enumerate() {
        if a != b && shown < 10 {
            eprintln!("line {}:\n  live   {a}\n  replay {b}", i + 1);
            shown += 1;
        }
    }
    if live.len() != again.len() {
        eprintln!("row counts differ: live {} replay {}", live.len(), again.len());
    }
    Ok(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Run(c) => run(c),
        Cmd::Sweep(c) => sweep(c),
        Cmd::Compare(c) => compare_arms(c),
        Cmd::GenTrace { common, rep } => gen_trace(common, *rep),
        Cmd::Replay { dir } => replay_dir(dir),
    };
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} failure(s)");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
