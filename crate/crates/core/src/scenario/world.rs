use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use super::config::{AppliesTo, MobilitySpec, ScenarioConfig};
use crate::kernel::rng::{repetition_seed, stream};
use crate::kernel::{
    run_until, Event, EventHandle, EventKind, EventQueue, Handler, KernelError, NodeId, Payload, Purpose,
    SimTime, StreamId, Target,
};
use crate::mobility::{generate, MobilityError, MobilityTrace, Pos};
use crate::power::{avg_power_mw, energy_mj, pdr, NodeMetrics, PowerError, PowerLedger};
use crate::radio::{neighbors_in_range, Dest, Frame, MacEnv, MacOutput, Radio, RadioEvent, SendStatus};
use crate::rpl::{Action, Body, ControlKind, ControlMsg, DropReason, NodeRole, RplNode, RplStats, RplTimer, ROOT_RANK};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("repetition {rep}: invariant violated at tick {at}: {what}")]
    Invariant { rep: u32, at: SimTime, what: String },
    #[error("repetition {rep}: {source}")]
    Mobility {
        rep: u32,
        #[source]
        source: MobilityError,
    },
    #[error("repetition {rep}: {source}")]
    Power {
        rep: u32,
        #[source]
        source: PowerError,
    },
    #[error("repetition {rep}: {source}")]
    Kernel {
        rep: u32,
        #[source]
        source: KernelError<WorldFault>,
    },
    #[error("writing logs to {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A failure raised from inside an event handler.
#[derive(Debug, Error)]
pub enum WorldFault {
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("log write failed: {0}")]
    Log(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldEvent {
    Radio(RadioEvent),
    Timer(NodeId, RplTimer),
    App(NodeId),
    Resample,
}

impl From<RadioEvent> for WorldEvent {
    fn from(e: RadioEvent) -> Self {
        WorldEvent::Radio(e)
    }
}

impl Payload for WorldEvent {
    fn target(&self) -> Target {
        match self {
            WorldEvent::Radio(e) => Target::Node(e.node()),
            WorldEvent::Timer(n, _) | WorldEvent::App(n) => Target::Node(*n),
            WorldEvent::Resample => Target::World,
        }
    }

    fn kind(&self) -> EventKind {
        match self {
            WorldEvent::Radio(e) => e.kind(),
            WorldEvent::Timer(..) => EventKind::TimerExpiry,
            WorldEvent::App(_) => EventKind::AppSend,
            WorldEvent::Resample => EventKind::WaypointUpdate,
        }
    }
}

/// Event kinds that charge the fixed per-event CPU cost.
pub fn charges_event_cpu(kind: EventKind) -> bool {
    matches!(
        kind,
        EventKind::TimerExpiry | EventKind::WakeSample | EventKind::AppSend
    )
}

/// Where a repetition writes its optional logs.
#[derive(Debug, Clone, Default)]
pub struct LogTargets {
    pub events: Option<PathBuf>,
    pub radio: Option<PathBuf>,
    pub control: Option<PathBuf>,
}

impl LogTargets {
    pub fn in_dir(dir: &Path, flags: super::LogFlags) -> Self {
        LogTargets {
            events: flags.events.then(|| dir.join("events.log")),
            radio: flags.radio.then(|| dir.join("radio.log")),
            control: flags.control.then(|| dir.join("control.log")),
        }
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub rep: u32,
    pub metrics: Vec<NodeMetrics>,
    pub ledgers: Vec<PowerLedger>,
    pub traces: Vec<MobilityTrace>,
    /// Edge toggles of the unit-disk graph plus preferred-parent changes.
    pub topology_changes: u64,
    pub invariant_checks: u64,
    pub events: u64,
    pub wall_secs: f64,
    /// Hop count of the last packet each origin delivered.
    pub last_hops: Vec<Option<u8>>,
    pub final_parent: Vec<Option<NodeId>>,
    pub final_rank: Vec<u16>,
    pub drops: BTreeMap<&'static str, u64>,
    /// Control frames put on air, summed over kinds and nodes.
    pub control_frames: u64,
    pub rpl_stats: RplStats,
}

pub fn role_of(node: NodeId, n_sinks: usize) -> NodeRole {
    if (node as usize) < n_sinks {
        NodeRole::Sink
    } else {
        NodeRole::Sender
    }
}

/// Uniform placement drawn from the repetition's placement stream, unless positions are fixed.
pub fn place_nodes(cfg: &ScenarioConfig, rep: u32) -> Vec<Pos> {
    if let Some(ps) = &cfg.positions {
        return ps.clone();
    }
    let mut r = stream(repetition_seed(cfg.seed, rep), StreamId::new(Purpose::Placement, 0));
    (0..cfg.n_nodes)
        .map(|_| Pos::new(r.random_range(0.0..cfg.area.width), r.random_range(0.0..cfg.area.height)))
        .collect()
}

pub fn build_traces(cfg: &ScenarioConfig, rep: u32) -> Result<Vec<MobilityTrace>, MobilityError> {
    let seed = repetition_seed(cfg.seed, rep);
    let t_end = cfg.t_end();
    place_nodes(cfg, rep)
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let id = i as NodeId;
            match &cfg.mobility {
                MobilitySpec::Mobile(m) if m.applies_to == AppliesTo::All || role_of(id, cfg.n_sinks) == NodeRole::Sender => {
                    let mut r = stream(seed, StreamId::new(Purpose::Mobility, id));
                    generate(&m.model, cfg.area, p, t_end, id, &mut r)
                }
                _ => Ok(MobilityTrace::stationary(id, p, t_end)),
            }
        })
        .collect()
}

struct Env<'a> {
    traces: &'a [MobilityTrace],
    nodes: &'a [RplNode],
}

impl MacEnv<Body> for Env<'_> {
    fn position(&self, node: NodeId, t: SimTime) -> Pos {
        self.traces[node as usize].position_at(t)
    }

    fn on_air(&mut self, node: NodeId, body: &mut Body, _t: SimTime) {
        if let Body::Control(ControlMsg::Dio { .. }) = body {
            *body = Body::Control(self.nodes[node as usize].current_dio());
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    ctrl: [u64; 7],
    sent: u64,
    delivered: u64,
    hops_sum: u64,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    t_end: SimTime,
    traces: Vec<MobilityTrace>,
    radio: Radio<Body>,
    nodes: Vec<RplNode>,
    timers: BTreeMap<(NodeId, RplTimer), EventHandle>,
    cpu: Vec<u64>,
    msg_cost: u64,
    event_cost: u64,
    counters: Vec<Counters>,
    sink_seen: BTreeSet<(NodeId, u32)>,
    last_hops: Vec<Option<u8>>,
    drops: BTreeMap<&'static str, u64>,
    control_log: Option<BufWriter<File>>,
    edges: BTreeSet<(NodeId, NodeId)>,
    edge_toggles: u64,
    checks: u64,
    resample: SimTime,
    mobile: bool,
}

fn drop_name(r: DropReason) -> &'static str {
    match r {
        DropReason::NotJoined => "not_joined",
        DropReason::RankError => "rank_error",
        DropReason::HopLimit => "hop_limit",
    }
}

impl World<'_> {
    fn charge(&mut self, node: NodeId, cost: u64, now: SimTime) {
        let room = self.t_end.saturating_sub(now).ticks();
        self.cpu[node as usize] += cost.min(room);
    }

    /// Writes one control-plane line and charges its CPU cost.
    fn control_line(
        &mut self,
        now: SimTime,
        node: NodeId,
        kind: &str,
        dir: &str,
        peer: &str,
        detail: Option<String>,
    ) -> Result<(), WorldFault> {
        self.charge(node, self.msg_cost, now);
        if let Some(w) = self.control_log.as_mut() {
            match detail {
                Some(d) => writeln!(w, "{}\t{node}\t{kind}\t{dir}\t{peer}\t{d}", now.ticks())?,
                None => writeln!(w, "{}\t{node}\t{kind}\t{dir}\t{peer}", now.ticks())?,
            }
        }
        Ok(())
    }

    fn process(
        &mut self,
        q: &mut EventQueue<WorldEvent>,
        node: NodeId,
        actions: Vec<Action>,
        mut mac: Vec<MacOutput<Body>>,
        now: SimTime,
    ) -> Result<(), WorldFault> {
        let mut work: VecDeque<(NodeId, Action)> = actions.into_iter().map(|a| (node, a)).collect();
        loop {
            if let Some((n, a)) = work.pop_front() {
                self.apply(q, n, a, now, &mut mac)?;
                continue;
            }
            if mac.is_empty() {
                return Ok(());
            }
            for m in std::mem::take(&mut mac) {
                let (n, acts) = self.on_mac(m, now)?;
                work.extend(acts.into_iter().map(|a| (n, a)));
            }
        }
    }

    fn apply(
        &mut self,
        q: &mut EventQueue<WorldEvent>,
        node: NodeId,
        a: Action,
        now: SimTime,
        mac: &mut Vec<MacOutput<Body>>,
    ) -> Result<(), WorldFault> {
        match a {
            Action::Send { dst, body } => {
                let frame = Frame {
                    src: node,
                    dst,
                    seq: 0,
                    bytes: body.bytes(&self.cfg.radio.frames),
                    body,
                };
                let mut env = Env {
                    traces: &self.traces,
                    nodes: &self.nodes,
                };
                self.radio.send(&mut env, q, node, frame, now, mac);
            }
            Action::SetTimer { timer, at } => {
                if let Some(h) = self.timers.remove(&(node, timer)) {
                    q.cancel(h);
                }
                let h = q
                    .schedule(at.max(now), WorldEvent::Timer(node, timer))
                    .expect("timers are never in the past");
                self.timers.insert((node, timer), h);
            }
            Action::CancelTimer(timer) => {
                if let Some(h) = self.timers.remove(&(node, timer)) {
                    q.cancel(h);
                }
            }
            Action::Deliver { origin, seq, hops } => {
                if self.sink_seen.insert((origin, seq)) {
                    let c = &mut self.counters[origin as usize];
                    c.delivered += 1;
                    c.hops_sum += hops as u64;
                    self.last_hops[origin as usize] = Some(hops);
                    self.control_line(now, node, "APP", "recv", &origin.to_string(), Some(format!("hops={hops}")))?;
                } else {
                    *self.drops.entry("duplicate").or_default() += 1;
                }
            }
            Action::Drop { reason, .. } => {
                *self.drops.entry(drop_name(reason)).or_default() += 1;
            }
        }
        Ok(())
    }

    fn on_mac(&mut self, m: MacOutput<Body>, now: SimTime) -> Result<(NodeId, Vec<Action>), WorldFault> {
        let mut out = Vec::new();
        match m {
            MacOutput::Received { node, frame } => {
                let from = frame.src;
                match frame.body {
                    Body::Control(c) => {
                        self.control_line(now, node, c.kind().as_str(), "recv", &from.to_string(), None)?
                    }
                    Body::Data(_) if !self.nodes[node as usize].is_sink() => {
                        self.control_line(now, node, "DATA", "recv", &from.to_string(), None)?
                    }
                    Body::Data(_) => {}
                }
                self.nodes[node as usize].on_receive(from, &frame.body, now, &mut out);
                if let (Body::Data(_), true) = (frame.body, self.nodes[node as usize].is_sink()) {
                    // a duplicate at the sink is still processed as a frame
                    let dup = out.iter().all(|a| match a {
                        Action::Deliver { origin, seq, .. } => self.sink_seen.contains(&(*origin, *seq)),
                        _ => true,
                    });
                    if dup {
                        self.control_line(now, node, "DATA", "recv", &from.to_string(), None)?;
                    }
                }
                Ok((node, out))
            }
            MacOutput::SendDone {
                node,
                frame,
                status,
                attempts,
            } => {
                if attempts > 0 {
                    let kind = match frame.body {
                        Body::Control(c) => {
                            self.counters[node as usize].ctrl[c.kind().index()] += 1;
                            c.kind().as_str()
                        }
                        Body::Data(_) => "DATA",
                    };
                    let (peer, detail) = match frame.dst {
                        Dest::Broadcast => ("*".to_string(), None),
                        Dest::Unicast(d) => (
                            d.to_string(),
                            Some(format!("tx={attempts},ack={}", u8::from(status == SendStatus::Acked))),
                        ),
                    };
                    self.control_line(now, node, kind, "sent", &peer, detail)?;
                } else if matches!(frame.body, Body::Data(_)) {
                    *self.drops.entry("mac_queue").or_default() += 1;
                }
                if matches!(frame.body, Body::Data(_)) && attempts > 0 && status != SendStatus::Acked {
                    *self.drops.entry("link").or_default() += 1;
                }
                self.nodes[node as usize].on_send_done(frame.dst, &frame.body, status, attempts, now, &mut out);
                Ok((node, out))
            }
        }
    }

    fn positions(&self, t: SimTime) -> Vec<Pos> {
        self.traces.iter().map(|tr| tr.position_at(t)).collect()
    }

    fn resample(&mut self, now: SimTime) -> Result<(), WorldFault> {
        if self.mobile {
            let edges = neighbors_in_range(&self.positions(now), &self.cfg.radio.udgm);
            self.edge_toggles += edges.symmetric_difference(&self.edges).count() as u64;
            self.edges = edges;
        }
        if self.cfg.check_invariants {
            self.checks += 1;
            check_dodag(&self.nodes).map_err(WorldFault::Invariant)?;
        }
        Ok(())
    }
}

/// Checks the preferred-parent graph on edges whose child holds the parent's current rank epoch.
pub fn check_dodag(nodes: &[RplNode]) -> Result<(), String> {
    let live = |n: &RplNode| -> Option<NodeId> {
        let p = n.parent()?;
        (n.joined() && !n.is_sink() && nodes[p as usize].epoch() == n.parent_epoch()).then_some(p)
    };
    for n in nodes {
        if n.is_sink() {
            if n.rank() != ROOT_RANK {
                return Err(format!("sink {} has rank {}", n.id(), n.rank()));
            }
            continue;
        }
        if !n.joined() {
            continue;
        }
        if n.parent().is_none() {
            return Err(format!("joined node {} has no preferred parent", n.id()));
        }
        if n.rank() <= ROOT_RANK {
            return Err(format!("node {} has rank {} at or below the root", n.id(), n.rank()));
        }
        if let Some(p) = live(n) {
            let pr = nodes[p as usize].rank();
            if n.rank() <= pr {
                return Err(format!(
                    "rank monotonicity: node {} rank {} <= parent {} rank {}",
                    n.id(),
                    n.rank(),
                    p,
                    pr
                ));
            }
        }
    }
    let mut done = vec![false; nodes.len()];
    for start in 0..nodes.len() {
        let mut path = BTreeSet::new();
        let mut cur = start as NodeId;
        while !done[cur as usize] {
            if !path.insert(cur) {
                return Err(format!("acyclicity: parent cycle through node {cur}"));
            }
            match live(&nodes[cur as usize]) {
                Some(p) => cur = p,
                None => break,
            }
        }
        for v in path {
            done[v as usize] = true;
        }
    }
    Ok(())
}

impl Handler<WorldEvent> for World<'_> {
    type Error = WorldFault;

    fn handle(&mut self, q: &mut EventQueue<WorldEvent>, ev: Event<WorldEvent>) -> Result<(), WorldFault> {
        let now = ev.fire_time;
        if let Target::Node(n) = ev.payload.target() {
            if charges_event_cpu(ev.payload.kind()) {
                self.charge(n, self.event_cost, now);
            }
        }
        match ev.payload {
            WorldEvent::Radio(re) => {
                let mut mac = Vec::new();
                let mut env = Env {
                    traces: &self.traces,
                    nodes: &self.nodes,
                };
                self.radio.handle(&mut env, q, re, now, &mut mac);
                self.process(q, re.node(), Vec::new(), mac, now)
            }
            WorldEvent::Timer(n, t) => {
                self.timers.remove(&(n, t));
                let mut out = Vec::new();
                self.nodes[n as usize].on_timer(t, now, &mut out);
                self.process(q, n, out, Vec::new(), now)
            }
            WorldEvent::App(n) => {
                let next = now + SimTime::from_secs(self.cfg.data_period);
                if next <= self.t_end {
                    q.schedule(next, WorldEvent::App(n)).expect("future");
                }
                let mut out = Vec::new();
                if self.nodes[n as usize].app_send(&mut out).is_some() {
                    self.counters[n as usize].sent += 1;
                    self.control_line(now, n, "APP", "sent", "-", None)?;
                }
                self.process(q, n, out, Vec::new(), now)
            }
            WorldEvent::Resample => {
                let next = now + self.resample;
                if next <= self.t_end {
                    q.schedule(next, WorldEvent::Resample).expect("future");
                }
                self.resample(now)
            }
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Runs repetition `rep` of `cfg`, optionally writing logs.
pub fn run_repetition(cfg: &ScenarioConfig, rep: u32, logs: &LogTargets) -> Result<RunResult, RunError> {
    let started = Instant::now();
    let seed = repetition_seed(cfg.seed, rep);
    let t_end = cfg.t_end();
    let n = cfg.n_nodes;
    let traces = build_traces(cfg, rep).map_err(|source| RunError::Mobility { rep, source })?;
    let mut radio = Radio::new(
        &cfg.radio.udgm,
        &cfg.radio.rdc,
        &cfg.radio.frames,
        n,
        seed,
        t_end,
        logs.radio.is_some(),
    );
    let nodes: Vec<RplNode> = (0..n as NodeId)
        .map(|i| RplNode::new(i, role_of(i, cfg.n_sinks), &cfg.rpl, seed))
        .collect();
    let control_log = match &logs.control {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => None,
    };
    let mut q: EventQueue<WorldEvent> = EventQueue::new();
    radio.start(&mut q, seed);
    let mobile = traces.iter().any(|t| !t.is_stationary());
    let mut world = World {
        cfg,
        t_end,
        radio,
        nodes,
        timers: BTreeMap::new(),
        cpu: vec![0; n],
        msg_cost: SimTime::from_secs(cfg.cpu.message).ticks(),
        event_cost: SimTime::from_secs(cfg.cpu.event).ticks(),
        counters: vec![Counters::default(); n],
        sink_seen: BTreeSet::new(),
        last_hops: vec![None; n],
        drops: BTreeMap::new(),
        control_log,
        edges: BTreeSet::new(),
        edge_toggles: 0,
        checks: 0,
        resample: SimTime::from_secs(cfg.resample_interval).max(SimTime::from_ticks(1)),
        mobile,
        traces,
    };
    world.edges = neighbors_in_range(&world.positions(SimTime::ZERO), &cfg.radio.udgm);
    for i in 0..n as NodeId {
        let mut out = Vec::new();
        world.nodes[i as usize].start(SimTime::ZERO, &mut out);
        world
            .process(&mut q, i, out, Vec::new(), SimTime::ZERO)
            .map_err(|e| fault(rep, SimTime::ZERO, e))?;
        if role_of(i, cfg.n_sinks) == NodeRole::Sender {
            let mut r = stream(seed, StreamId::new(Purpose::App, i));
            let jitter = SimTime::from_secs(cfg.app_jitter).ticks();
            let at = SimTime::from_secs(cfg.app_start)
                + SimTime::from_ticks(if jitter > 0 { r.random_range(0..jitter) } else { 0 });
            if at <= t_end {
                q.schedule(at, WorldEvent::App(i)).expect("future");
            }
        }
    }
    if world.mobile || cfg.check_invariants {
        q.schedule(world.resample.min(t_end), WorldEvent::Resample).expect("future");
    }

    let mut events_log = match &logs.events {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => None,
    };
    let stats = run_until(
        &mut q,
        &mut world,
        t_end,
        events_log.as_mut().map(|w| w as &mut dyn Write),
    )
    .map_err(|e| match e {
        KernelError::Handler {
            at,
            source: WorldFault::Invariant(what),
            ..
        } => RunError::Invariant { rep, at, what },
        other => RunError::Kernel { rep, source: other },
    })?;
    if let (Some(w), Some(p)) = (events_log.as_mut(), &logs.events) {
        w.flush().map_err(io_err(p))?;
    }
    if let (Some(w), Some(p)) = (world.control_log.as_mut(), &logs.control) {
        w.flush().map_err(io_err(p))?;
    }
    if cfg.check_invariants {
        check_dodag(&world.nodes).map_err(|what| RunError::Invariant { rep, at: t_end, what })?;
    }

    let radio_ledgers = world.radio.finish();
    if let Some(p) = &logs.radio {
        let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
        for a in world.radio.take_activity() {
            writeln!(w, "{}\t{}\t{}\t{}", a.start.ticks(), a.end.ticks(), a.node, a.state.as_str())
                .map_err(io_err(p))?;
        }
        w.flush().map_err(io_err(p))?;
    }
    let elapsed = t_end.ticks();
    let mut metrics = Vec::with_capacity(n);
    let mut ledgers = Vec::with_capacity(n);
    for i in 0..n {
        let ledger = PowerLedger::finalize(world.cpu[i], radio_ledgers[i], elapsed)
            .map_err(|source| RunError::Power { rep, source })?;
        let c = world.counters[i];
        metrics.push(node_metrics(
            cfg,
            rep,
            i as NodeId,
            &ledger,
            &c.ctrl,
            c.sent,
            c.delivered,
            c.hops_sum,
            world.nodes[i].etx().mean(),
        )
        .map_err(|source| RunError::Power { rep, source })?);
        ledgers.push(ledger);
    }
    let parent_changes: u64 = world.nodes.iter().map(|n| n.parent_changes()).sum();
    let control_frames = world.counters.iter().map(|c| c.ctrl.iter().sum::<u64>()).sum();
    Ok(RunResult {
        rep,
        metrics,
        ledgers,
        topology_changes: world.edge_toggles + parent_changes,
        invariant_checks: world.checks,
        events: stats.events_dispatched,
        wall_secs: started.elapsed().as_secs_f64(),
        last_hops: world.last_hops,
        final_parent: world.nodes.iter().map(|n| n.parent()).collect(),
        final_rank: world.nodes.iter().map(|n| n.rank()).collect(),
        drops: world.drops,
        control_frames,
        rpl_stats: world.nodes.iter().fold(RplStats::default(), |a, n| sum_stats(a, n.stats())),
        traces: world.traces,
    })
}

fn fault(rep: u32, at: SimTime, e: WorldFault) -> RunError {
    match e {
        WorldFault::Invariant(what) => RunError::Invariant { rep, at, what },
        WorldFault::Log(source) => RunError::Io {
            path: "control.log".into(),
            source,
        },
    }
}

/// Assembles one report row; shared by live runs and log replay.
#[allow(clippy::too_many_arguments)]
pub fn node_metrics(
    cfg: &ScenarioConfig,
    rep: u32,
    node: NodeId,
    ledger: &PowerLedger,
    ctrl: &[u64; 7],
    sent: u64,
    delivered: u64,
    hops_sum: u64,
    mean_etx: Option<f64>,
) -> Result<NodeMetrics, PowerError> {
    let k = |kind: ControlKind| ctrl[kind.index()];
    let elapsed = cfg.t_end().ticks();
    Ok(NodeMetrics {
        rep,
        node,
        role: role_of(node, cfg.n_sinks),
        energy: energy_mj(ledger, &cfg.power),
        avg_mw: avg_power_mw(ledger, &cfg.power, elapsed),
        sent,
        delivered,
        pdr: pdr(sent, delivered)?,
        avg_hops: (delivered > 0).then(|| hops_sum as f64 / delivered as f64),
        dio: k(ControlKind::Dio),
        dao: k(ControlKind::Dao),
        dis: k(ControlKind::Dis),
        nd_msgs: k(ControlKind::Rs) + k(ControlKind::Ra) + k(ControlKind::Ns) + k(ControlKind::Na),
        mean_etx,
    })
}

impl RunResult {
    /// A result carrying only report rows.
    pub fn from_rows(metrics: Vec<NodeMetrics>) -> Self {
        RunResult {
            rep: metrics.first().map_or(0, |m| m.rep),
            metrics,
            ledgers: Vec::new(),
            traces: Vec::new(),
            topology_changes: 0,
            invariant_checks: 0,
            events: 0,
            wall_secs: 0.0,
            last_hops: Vec::new(),
            final_parent: Vec::new(),
            final_rank: Vec::new(),
            drops: BTreeMap::new(),
            control_frames: 0,
            rpl_stats: RplStats::default(),
        }
    }
}

fn sum_stats(a: RplStats, b: &RplStats) -> RplStats {
    RplStats {
        stale_parent: a.stale_parent + b.stale_parent,
        failed_parent: a.failed_parent + b.failed_parent,
        switches: a.switches + b.switches,
        detaches: a.detaches + b.detaches,
        reset_dodag: a.reset_dodag + b.reset_dodag,
        reset_dis: a.reset_dis + b.reset_dis,
        reset_data: a.reset_data + b.reset_data,
    }
}
