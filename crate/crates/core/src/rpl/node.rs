use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{
    compute_rank, Body, ControlMsg, DataPacket, EtxEstimator, NaStatus, NodeRole, Ocp, Prefix, RplConfig,
    Trickle, TrickleSchedule, DEFAULT_PREFIX, DODAG_VERSION, INFINITE_RANK, ROOT_RANK,
};
use crate::kernel::rng::stream;
use crate::kernel::{NodeId, Purpose, SimRng, SimTime, StreamId};
use crate::radio::{Dest, SendStatus};

/// Binary MRHOF hysteresis: an alternative parent must be this much better.
const PARENT_SWITCH_THRESHOLD: u16 = 192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RplTimer {
    TrickleFire,
    TrickleEnd,
    Dao,
    DaoRetry,
    Dis,
    Rs,
    NaWait,
    RaReply(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    NotJoined,
    RankError,
    HopLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send { dst: Dest, body: Body },
    /// Arms `timer` at `at`, replacing any pending instance of it.
    SetTimer { timer: RplTimer, at: SimTime },
    CancelTimer(RplTimer),
    /// A data packet reached this sink.
    Deliver { origin: NodeId, seq: u32, hops: u8 },
    Drop { origin: NodeId, seq: u32, reason: DropReason },
}

/// Why the DODAG state moved; diagnostic only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RplStats {
    pub stale_parent: u64,
    pub failed_parent: u64,
    pub switches: u64,
    pub detaches: u64,
    pub reset_dodag: u64,
    pub reset_dis: u64,
    pub reset_data: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentEntry {
    pub rank: u16,
    pub epoch: u32,
    pub dodag_id: NodeId,
    pub version: u16,
    pub interval: SimTime,
    pub last_heard: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub next_hop: NodeId,
    pub expires: SimTime,
}

#[derive(Debug, Clone, Default)]
struct Nd {
    done: bool,
    rs_timeout: SimTime,
    ra_sources: Vec<NodeId>,
    tried: BTreeSet<NodeId>,
    pending: Option<NodeId>,
    default_router: Option<NodeId>,
    prefix: Option<Prefix>,
}

#[derive(Debug, Clone)]
pub struct RplNode {
    id: NodeId,
    role: NodeRole,
    cfg: RplConfig,
    rank: u16,
    epoch: u32,
    joined: bool,
    parent: Option<NodeId>,
    parent_epoch: u32,
    dodag_id: Option<NodeId>,
    version: u16,
    lowest_rank: Option<u16>,
    parents: BTreeMap<NodeId, ParentEntry>,
    routes: BTreeMap<NodeId, Route>,
    trickle: Trickle,
    trickle_rng: SimRng,
    nd_rng: SimRng,
    dao_rng: SimRng,
    etx: EtxEstimator,
    fail_streak: u32,
    dao_seq: u32,
    app_seq: u32,
    nd: Nd,
    neighbor_cache: BTreeSet<NodeId>,
    ra_pending: BTreeSet<NodeId>,
    parent_changes: u64,
    stats: RplStats,
}

impl RplNode {
    pub fn new(id: NodeId, role: NodeRole, cfg: &RplConfig, seed: u64) -> Self {
        RplNode {
            id,
            role,
            cfg: cfg.clone(),
            rank: INFINITE_RANK,
            epoch: 0,
            joined: false,
            parent: None,
            parent_epoch: 0,
            dodag_id: None,
            version: 0,
            lowest_rank: None,
            parents: BTreeMap::new(),
            routes: BTreeMap::new(),
            trickle: Trickle::new(cfg.i_min_time(), cfg.doublings, cfg.k),
            trickle_rng: stream(seed, StreamId::new(Purpose::Trickle, id)),
            nd_rng: stream(seed, StreamId::new(Purpose::Nd, id)),
            dao_rng: stream(seed, StreamId::new(Purpose::Dao, id)),
            etx: EtxEstimator::new(cfg.etx_alpha),
            fail_streak: 0,
            dao_seq: 0,
            app_seq: 0,
            nd: Nd {
                rs_timeout: SimTime::from_secs(cfg.rs_timeout),
                ..Nd::default()
            },
            neighbor_cache: BTreeSet::new(),
            ra_pending: BTreeSet::new(),
            parent_changes: 0,
            stats: RplStats::default(),
        }
    }

    // ------------------------------------------------------------ accessors

    pub fn id(&self) -> NodeId {
        self.id
    }
    pub fn role(&self) -> NodeRole {
        self.role
    }
    pub fn is_sink(&self) -> bool {
        self.role == NodeRole::Sink
    }
    pub fn rank(&self) -> u16 {
        self.rank
    }
    /// Bumped every time this node's rank rises.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }
    pub fn joined(&self) -> bool {
        self.joined
    }
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
    /// Epoch the preferred parent advertised when it was last selected.
    pub fn parent_epoch(&self) -> u32 {
        self.parent_epoch
    }
    pub fn dodag_id(&self) -> Option<NodeId> {
        self.dodag_id
    }
    pub fn parents(&self) -> &BTreeMap<NodeId, ParentEntry> {
        &self.parents
    }
    pub fn routes(&self) -> &BTreeMap<NodeId, Route> {
        &self.routes
    }
    pub fn route_to(&self, target: NodeId, now: SimTime) -> Option<NodeId> {
        self.routes
            .get(&target)
            .filter(|r| r.expires > now)
            .map(|r| r.next_hop)
    }
    pub fn trickle(&self) -> &Trickle {
        &self.trickle
    }
    pub fn etx(&self) -> &EtxEstimator {
        &self.etx
    }
    pub fn nd_done(&self) -> bool {
        self.nd.done
    }
    pub fn default_router(&self) -> Option<NodeId> {
        self.nd.default_router
    }
    pub fn prefix(&self) -> Option<Prefix> {
        self.nd.prefix
    }
    pub fn neighbor_cache(&self) -> &BTreeSet<NodeId> {
        &self.neighbor_cache
    }
    pub fn parent_changes(&self) -> u64 {
        self.parent_changes
    }
    pub fn stats(&self) -> &RplStats {
        &self.stats
    }
    pub fn app_seq(&self) -> u32 {
        self.app_seq
    }

    fn is_router(&self) -> bool {
        self.is_sink() || self.joined
    }

    /// The DIO this node would put on air right now.
    pub fn current_dio(&self) -> ControlMsg {
        ControlMsg::Dio {
            instance: self.cfg.instance_id,
            dodag_id: self.dodag_id.unwrap_or(self.id),
            version: self.version,
            rank: self.rank,
            ocp: self.cfg.ocp,
            epoch: self.epoch,
            interval: self.trickle.interval(),
        }
    }

    fn dag_rank(&self, r: u16) -> u16 {
        r / self.cfg.min_hop_rank_increase
    }

    fn draw(&mut self, max_secs: f64) -> SimTime {
        let t = SimTime::from_secs(max_secs).ticks().max(1);
        SimTime::from_ticks(self.nd_rng.random_range(0..t))
    }

    // ------------------------------------------------------------ lifecycle

    pub fn start(&mut self, now: SimTime, out: &mut Vec<Action>) {
        if self.is_sink() {
            self.rank = ROOT_RANK;
            self.lowest_rank = Some(ROOT_RANK);
            self.joined = true;
            self.dodag_id = Some(self.id);
            self.version = DODAG_VERSION;
            self.nd.done = true;
            let s = self.trickle.start(now, &mut self.trickle_rng);
            push_trickle(out, s);
        } else {
            let at = now + self.draw(self.cfg.rs_initial_delay);
            out.push(Action::SetTimer { timer: RplTimer::Rs, at });
        }
    }

    pub fn on_timer(&mut self, timer: RplTimer, now: SimTime, out: &mut Vec<Action>) {
        match timer {
            RplTimer::TrickleFire => {
                if self.trickle.is_running() && self.trickle.should_transmit() {
                    out.push(Action::Send {
                        dst: Dest::Broadcast,
                        body: Body::Control(self.current_dio()),
                    });
                }
            }
            RplTimer::TrickleEnd => {
                if self.trickle.is_running() {
                    let s = self.trickle.next_interval(now, &mut self.trickle_rng);
                    push_trickle(out, s);
                }
            }
            RplTimer::Dao => {
                if self.joined && !self.is_sink() {
                    self.update_dodag(now, out);
                    if self.joined {
                        self.send_dao(out);
                        let wait = self.cfg.dao_interval * self.dao_rng.random_range(0.5..1.5);
                        out.push(Action::SetTimer {
                            timer: RplTimer::Dao,
                            at: now + SimTime::from_secs(wait),
                        });
                    }
                }
            }
            RplTimer::DaoRetry => {
                if self.joined && !self.is_sink() {
                    self.send_dao(out);
                }
            }
            RplTimer::Dis => {
                if !self.joined && self.nd.done {
                    self.send_dis(now, out);
                }
            }
            RplTimer::Rs => {
                if !self.nd.done && self.nd.pending.is_none() {
                    self.send_rs(now, out);
                }
            }
            RplTimer::NaWait => {
                if let Some(r) = self.nd.pending.take() {
                    self.nd.tried.insert(r);
                    self.next_ns(now, out);
                }
            }
            RplTimer::RaReply(to) => {
                self.ra_pending.remove(&to);
                if self.is_router() {
                    out.push(Action::Send {
                        dst: Dest::Unicast(to),
                        body: Body::Control(ControlMsg::Ra {
                            pio: DEFAULT_PREFIX,
                            co: 0,
                            abro: self.dodag_id.unwrap_or(self.id),
                        }),
                    });
                }
            }
        }
    }

    pub fn on_receive(&mut self, from: NodeId, body: &Body, now: SimTime, out: &mut Vec<Action>) {
        if let Some(e) = self.parents.get_mut(&from) {
            e.last_heard = now;
        }
        match *body {
            Body::Data(pkt) => self.handle_data(pkt, now, out),
            Body::Control(msg) => match msg {
                ControlMsg::Rs => {
                    if self.is_router() && self.ra_pending.insert(from) {
                        let at = now + self.draw(self.cfg.ra_delay_max);
                        out.push(Action::SetTimer {
                            timer: RplTimer::RaReply(from),
                            at,
                        });
                    }
                }
                ControlMsg::Ra { pio, .. } => self.handle_ra(from, pio, now, out),
                ControlMsg::Ns { .. } => {
                    let ok = self.neighbor_cache.contains(&from) || self.neighbor_cache.len() < self.cfg.neighbor_cache;
                    let status = if ok {
                        self.neighbor_cache.insert(from);
                        NaStatus::Ok
                    } else {
                        NaStatus::Full
                    };
                    out.push(Action::Send {
                        dst: Dest::Unicast(from),
                        body: Body::Control(ControlMsg::Na { status }),
                    });
                }
                ControlMsg::Na { status } => self.handle_na(from, status, now, out),
                ControlMsg::Dio {
                    instance,
                    dodag_id,
                    version,
                    rank,
                    ocp,
                    epoch,
                    interval,
                } => {
                    if instance != self.cfg.instance_id || ocp != self.cfg.ocp {
                        return;
                    }
                    let entry = ParentEntry {
                        rank,
                        epoch,
                        dodag_id,
                        version,
                        interval,
                        last_heard: now,
                    };
                    self.handle_dio(from, entry, now, out);
                }
                ControlMsg::Dao { target, .. } => self.handle_dao(from, msg, target, now, out),
                ControlMsg::Dis => {
                    if self.joined {
                        self.stats.reset_dis += 1;
                        self.trickle_reset(now, out);
                    }
                }
            },
        }
    }

    /// MAC verdict for a frame this node queued.
    pub fn on_send_done(
        &mut self,
        dst: Dest,
        body: &Body,
        status: SendStatus,
        attempts: u32,
        now: SimTime,
        out: &mut Vec<Action>,
    ) {
        let Dest::Unicast(d) = dst else { return };
        let aired = attempts > 0;
        if aired {
            self.etx.record(d, attempts, status == SendStatus::Acked);
        }
        let mut lost_parent = false;
        match status {
            SendStatus::Acked => {
                if self.parent == Some(d) {
                    self.fail_streak = 0;
                }
                if let Some(e) = self.parents.get_mut(&d) {
                    e.last_heard = now;
                }
            }
            SendStatus::NoAck | SendStatus::NoProbe if self.parent == Some(d) => {
                self.fail_streak += 1;
                if self.fail_streak >= self.cfg.parent_fail_limit {
                    self.parents.remove(&d);
                    self.stats.failed_parent += 1;
                    self.fail_streak = 0;
                    lost_parent = true;
                }
            }
            _ => {}
        }
        if let Body::Control(ControlMsg::Dao { target, .. }) = *body {
            if target == self.id && status != SendStatus::Acked && self.joined {
                // jittered so two hidden senders that collided do not retry in lockstep
                let wait = self.cfg.dao_retry * self.dao_rng.random_range(0.5..1.5);
                out.push(Action::SetTimer {
                    timer: RplTimer::DaoRetry,
                    at: now + SimTime::from_secs(wait),
                });
            }
        }
        if self.joined && !self.is_sink() && (lost_parent || (aired && self.parent == Some(d))) {
            self.update_dodag(now, out);
        }
    }

    /// Generates one application packet toward the sink.
    pub fn app_send(&mut self, out: &mut Vec<Action>) -> Option<u32> {
        if self.is_sink() {
            return None;
        }
        self.app_seq += 1;
        let seq = self.app_seq;
        match (self.joined, self.parent) {
            (true, Some(p)) => out.push(Action::Send {
                dst: Dest::Unicast(p),
                body: Body::Data(DataPacket {
                    origin: self.id,
                    seq,
                    hops: 1,
                    sender_rank: self.rank,
                }),
            }),
            _ => out.push(Action::Drop {
                origin: self.id,
                seq,
                reason: DropReason::NotJoined,
            }),
        }
        Some(seq)
    }

    // ------------------------------------------------------------ ND

    fn send_rs(&mut self, now: SimTime, out: &mut Vec<Action>) {
        out.push(Action::Send {
            dst: Dest::Broadcast,
            body: Body::Control(ControlMsg::Rs),
        });
        out.push(Action::SetTimer {
            timer: RplTimer::Rs,
            at: now + self.nd.rs_timeout,
        });
        let cap = SimTime::from_secs(self.cfg.rs_timeout_max);
        self.nd.rs_timeout = SimTime::from_ticks((self.nd.rs_timeout.ticks() * 2).min(cap.ticks()));
    }

    fn send_ns(&mut self, to: NodeId, now: SimTime, out: &mut Vec<Action>) {
        self.nd.pending = Some(to);
        out.push(Action::Send {
            dst: Dest::Unicast(to),
            body: Body::Control(ControlMsg::Ns { aro: (self.id, self.id) }),
        });
        out.push(Action::SetTimer {
            timer: RplTimer::NaWait,
            at: now + SimTime::from_secs(self.cfg.rs_timeout),
        });
    }

    fn next_ns(&mut self, now: SimTime, out: &mut Vec<Action>) {
        let next = self.nd.ra_sources.iter().copied().find(|r| !self.nd.tried.contains(r));
        match next {
            Some(r) => self.send_ns(r, now, out),
            None => {
                self.nd.ra_sources.clear();
                self.nd.tried.clear();
                self.send_rs(now, out);
            }
        }
    }

    fn handle_ra(&mut self, from: NodeId, pio: Prefix, now: SimTime, out: &mut Vec<Action>) {
        if self.nd.done || self.is_sink() {
            return;
        }
        if self.nd.prefix.is_none() {
            self.nd.prefix = Some(pio);
        }
        if !self.nd.ra_sources.contains(&from) {
            self.nd.ra_sources.push(from);
        }
        if self.nd.pending.is_none() && !self.nd.tried.contains(&from) {
            out.push(Action::CancelTimer(RplTimer::Rs));
            self.send_ns(from, now, out);
        }
    }

    fn handle_na(&mut self, from: NodeId, status: NaStatus, now: SimTime, out: &mut Vec<Action>) {
        if self.nd.done || self.nd.pending != Some(from) {
            return;
        }
        self.nd.pending = None;
        out.push(Action::CancelTimer(RplTimer::NaWait));
        match status {
            NaStatus::Ok => {
                self.nd.done = true;
                self.nd.default_router = Some(from);
                if !self.joined {
                    self.send_dis(now, out);
                }
            }
            NaStatus::Full => {
                self.nd.tried.insert(from);
                self.next_ns(now, out);
            }
        }
    }

    // ------------------------------------------------------------ DODAG

    fn send_dis(&mut self, now: SimTime, out: &mut Vec<Action>) {
        out.push(Action::Send {
            dst: Dest::Broadcast,
            body: Body::Control(ControlMsg::Dis),
        });
        out.push(Action::SetTimer {
            timer: RplTimer::Dis,
            at: now + SimTime::from_secs(self.cfg.dis_interval),
        });
    }

    fn send_dao(&mut self, out: &mut Vec<Action>) {
        let Some(p) = self.parent else { return };
        self.dao_seq += 1;
        out.push(Action::Send {
            dst: Dest::Unicast(p),
            body: Body::Control(ControlMsg::Dao {
                instance: self.cfg.instance_id,
                target: self.id,
                dao_seq: self.dao_seq,
            }),
        });
    }

    fn trickle_reset(&mut self, now: SimTime, out: &mut Vec<Action>) {
        if let Some(s) = self.trickle.reset(now, &mut self.trickle_rng) {
            push_trickle(out, s);
        }
    }

    fn handle_dio(&mut self, from: NodeId, entry: ParentEntry, now: SimTime, out: &mut Vec<Action>) {
        if self.is_sink() {
            self.trickle.hear_consistent();
            return;
        }
        if !self.nd.done {
            return;
        }
        if entry.rank == INFINITE_RANK {
            self.parents.remove(&from);
        } else {
            self.parents.insert(from, entry);
        }
        let was_joined = self.joined;
        let changed = self.update_dodag(now, out);
        if was_joined && self.joined && !changed {
            self.trickle.hear_consistent();
        }
    }

    /// Reruns parent selection; resets trickle when the rank class or parent changed.
    fn update_dodag(&mut self, now: SimTime, out: &mut Vec<Action>) -> bool {
        let was_joined = self.joined;
        let (r0, p0) = (self.rank, self.parent);
        self.select_parent(now, out);
        let changed = self.parent != p0 || self.dag_rank(self.rank) != self.dag_rank(r0);
        if was_joined && self.joined && changed {
            self.stats.reset_dodag += 1;
            self.trickle_reset(now, out);
        }
        changed
    }

    fn select_parent(&mut self, now: SimTime, out: &mut Vec<Action>) {
        let stale = self.cfg.stale_intervals as u64;
        // acked DAOs refresh the parent at least once per DAO interval
        let floor = SimTime::from_secs(self.cfg.dao_interval).max(self.trickle.i_min());
        let fresh = |e: &ParentEntry| {
            let window = e.interval.max(floor).ticks().saturating_mul(stale);
            now.saturating_sub(e.last_heard).ticks() <= window
        };
        if let Some(p) = self.parent {
            if self.parents.get(&p).is_some_and(|e| !fresh(e)) {
                self.stats.stale_parent += 1;
            }
        }
        self.parents.retain(|_, e| fresh(e));
        let mut excluded: BTreeSet<NodeId> = BTreeSet::new();
        for (t, r) in &self.routes {
            if r.expires > now {
                excluded.insert(*t);
                excluded.insert(r.next_hop);
            }
        }
        let ceiling = self.lowest_rank.map(|l| l.saturating_add(self.cfg.max_rank_increase));
        let candidate = |id: NodeId, e: &ParentEntry| -> Option<(u16, NodeId, u16, NodeId)> {
            if excluded.contains(&id) || id == self.id || e.rank == INFINITE_RANK {
                return None;
            }
            let r = compute_rank(self.cfg.ocp, e.rank, self.etx.get(id), self.cfg.min_hop_rank_increase)?;
            if ceiling.is_some_and(|c| r > c) {
                return None;
            }
            Some((r, e.dodag_id, e.rank, id))
        };
        let best = self.parents.iter().filter_map(|(&id, e)| candidate(id, e)).min();
        let current = self
            .parent
            .and_then(|p| self.parents.get(&p).and_then(|e| candidate(p, e)));
        let pick = match (best, current) {
            (Some(b), Some(c))
                if self.cfg.ocp == Ocp::Mrhof && b.3 != c.3 && b.0.saturating_add(PARENT_SWITCH_THRESHOLD) > c.0 =>
            {
                Some(c)
            }
            (b, _) => b,
        };
        let Some((rank, dodag_id, _, p)) = pick else {
            if self.joined {
                self.detach(now, out);
            }
            return;
        };
        let e = self.parents[&p];
        let first_join = !self.joined;
        if !first_join && rank > self.rank {
            self.epoch += 1;
        }
        let switched = self.parent != Some(p);
        self.rank = rank;
        self.parent = Some(p);
        self.parent_epoch = e.epoch;
        self.dodag_id = Some(dodag_id);
        self.version = e.version;
        self.lowest_rank = Some(self.lowest_rank.map_or(rank, |l| l.min(rank)));
        if switched {
            self.fail_streak = 0;
            self.parent_changes += 1;
            if !first_join {
                self.stats.switches += 1;
            }
        }
        if first_join {
            self.joined = true;
            out.push(Action::CancelTimer(RplTimer::Dis));
            let s = self.trickle.start(now, &mut self.trickle_rng);
            push_trickle(out, s);
            out.push(Action::SetTimer {
                timer: RplTimer::Dao,
                at: now + SimTime::from_secs(self.cfg.dao_interval),
            });
        }
        if switched {
            self.send_dao(out);
        }
    }

    fn detach(&mut self, now: SimTime, out: &mut Vec<Action>) {
        self.rank = INFINITE_RANK;
        self.epoch += 1;
        self.joined = false;
        self.parent = None;
        self.lowest_rank = None;
        self.dodag_id = None;
        self.parents.clear();
        self.fail_streak = 0;
        self.parent_changes += 1;
        self.stats.detaches += 1;
        self.trickle.stop();
        for t in [RplTimer::TrickleFire, RplTimer::TrickleEnd, RplTimer::Dao, RplTimer::DaoRetry] {
            out.push(Action::CancelTimer(t));
        }
        out.push(Action::Send {
            dst: Dest::Broadcast,
            body: Body::Control(self.current_dio()),
        });
        self.send_dis(now, out);
    }

    fn handle_dao(&mut self, from: NodeId, msg: ControlMsg, target: NodeId, now: SimTime, out: &mut Vec<Action>) {
        if !self.joined || self.parent == Some(from) || target == self.id {
            return;
        }
        self.routes.insert(
            target,
            Route {
                next_hop: from,
                expires: now + SimTime::from_secs(self.cfg.route_lifetime),
            },
        );
        self.routes.retain(|_, r| r.expires > now);
        if let (false, Some(p)) = (self.is_sink(), self.parent) {
            out.push(Action::Send {
                dst: Dest::Unicast(p),
                body: Body::Control(msg),
            });
        }
    }

    fn handle_data(&mut self, pkt: DataPacket, now: SimTime, out: &mut Vec<Action>) {
        let drop = |reason| Action::Drop {
            origin: pkt.origin,
            seq: pkt.seq,
            reason,
        };
        if self.is_sink() {
            out.push(Action::Deliver {
                origin: pkt.origin,
                seq: pkt.seq,
                hops: pkt.hops,
            });
            return;
        }
        let Some(p) = self.parent.filter(|_| self.joined) else {
            out.push(drop(DropReason::NotJoined));
            return;
        };
        if pkt.sender_rank <= self.rank {
            out.push(drop(DropReason::RankError));
            self.stats.reset_data += 1;
            self.trickle_reset(now, out);
            return;
        }
        if pkt.hops >= self.cfg.hop_limit {
            out.push(drop(DropReason::HopLimit));
            return;
        }
        out.push(Action::Send {
            dst: Dest::Unicast(p),
            body: Body::Data(DataPacket {
                hops: pkt.hops + 1,
                sender_rank: self.rank,
                ..pkt
            }),
        });
    }
}

fn push_trickle(out: &mut Vec<Action>, s: TrickleSchedule) {
    out.push(Action::SetTimer {
        timer: RplTimer::TrickleFire,
        at: s.fire,
    });
    out.push(Action::SetTimer {
        timer: RplTimer::TrickleEnd,
        at: s.end,
    });
}
