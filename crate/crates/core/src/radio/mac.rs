use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

use rand::Rng;

use super::{
    airtime, Dest, Frame, FrameSizes, RadioActivity, RadioEvent, RadioScheduler, RadioState,
    RdcConfig, RdcMode, UdgmConfig,
};
use crate::kernel::rng::{stream, Purpose, StreamId};
use crate::kernel::{EventHandle, NodeId, SimRng, SimTime};
use crate::mobility::Pos;

pub const QUEUE_CAPACITY: usize = 16;
pub const MAX_ATTEMPTS: u32 = 3;
pub const MAX_BACKOFFS: u32 = 3;

/// Retry delay after the `n`-th failure: one wake interval plus a window that
/// widens to three wake intervals.
fn backoff(wake: u64, n: u32, rng: &mut SimRng) -> u64 {
    wake + rng.random_range(0..wake * u64::from(n.clamp(1, 3)))
}
/// Wake intervals a unicast LPT sender waits for the target's probe.
pub const LPT_UNICAST_WAIT: u64 = 3;

/// What the MAC needs from the world: positions, and a hook to refresh a
/// frame body at the moment it goes on air.
pub trait MacEnv<B> {
    fn position(&self, node: NodeId, t: SimTime) -> Pos;
    fn on_air(&mut self, _node: NodeId, _body: &mut B, _t: SimTime) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendStatus {
    Acked,
    NoAck,
    Broadcast,
    ChannelBusy,
    QueueFull,
    NoProbe,
}

#[derive(Debug)]
pub enum MacOutput<B> {
    Received {
        node: NodeId,
        frame: Rc<Frame<B>>,
    },
    /// `attempts` counts the trains that actually went on air.
    SendDone {
        node: NodeId,
        frame: Frame<B>,
        status: SendStatus,
        attempts: u32,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RadioLedger {
    pub tx_ticks: u64,
    pub listen_ticks: u64,
    pub off_ticks: u64,
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    mode: RdcMode,
    wake: u64,
    sample: u64,
    gap: u64,
    ack: u64,
    probe: u64,
    tx_range: f64,
    intf_range: f64,
    success: f64,
    bitrate: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum St {
    Off,
    Idle,
    Sampling { until: SimTime },
    /// `resume` is the end of the wake sample the lock interrupted.
    Receiving { carrier: u64, copy_end: SimTime, resume: SimTime },
    Acking { until: SimTime },
    Transmitting { carrier: u64 },
    Probing,
    Waiting,
}

impl St {
    fn listening(self) -> bool {
        matches!(
            self,
            St::Idle | St::Sampling { .. } | St::Receiving { .. } | St::Waiting
        )
    }
}

struct Outgoing<B> {
    frame: Frame<B>,
    attempts: u32,
    backoffs: u32,
}

struct LptWait {
    expired: bool,
    served: BTreeSet<NodeId>,
}

struct MacNode<B> {
    state: St,
    since: SimTime,
    queue: VecDeque<Outgoing<B>>,
    in_flight: bool,
    retry: Option<EventHandle>,
    train_end: Option<EventHandle>,
    lpt: Option<LptWait>,
    lpt_deadline: Option<EventHandle>,
    probe: Option<u64>,
    next_seq: u32,
    last_seen: BTreeMap<NodeId, u32>,
    ledger: RadioLedger,
    backoff_rng: SimRng,
    loss_rng: SimRng,
}

enum CarrierKind<B> {
    Train {
        frame: Rc<Frame<B>>,
        airtime: u64,
        period: u64,
        copies: u64,
        /// Ack carrier already sent for this train, with its arrival time.
        ack_pending: Option<(u64, SimTime)>,
    },
    Ack,
    Probe,
}

struct Carrier<B> {
    src: NodeId,
    start: SimTime,
    /// End of radiated energy.
    air_end: SimTime,
    /// End of the sender's involvement (includes the final ack window).
    end: SimTime,
    kind: CarrierKind<B>,
}

/// The shared channel plus every node's MAC.
pub struct Radio<B> {
    t: Timing,
    nodes: Vec<MacNode<B>>,
    carriers: BTreeMap<u64, Carrier<B>>,
    next_carrier: u64,
    t_end: SimTime,
    activity: Option<Vec<RadioActivity>>,
}

impl<B: Clone> Radio<B> {
    pub fn new(
        udgm: &UdgmConfig,
        rdc: &RdcConfig,
        sizes: &FrameSizes,
        n_nodes: usize,
        seed: u64,
        t_end: SimTime,
        record_activity: bool,
    ) -> Self {
        let t = Timing {
            mode: rdc.mode,
            wake: rdc.wake_interval().ticks(),
            sample: SimTime::from_secs(rdc.wake_sample_duration).ticks(),
            gap: SimTime::from_secs(rdc.strobe_gap).ticks(),
            ack: sizes.airtime(sizes.ack).ticks(),
            probe: sizes.airtime(sizes.probe).ticks(),
            tx_range: udgm.tx_range,
            intf_range: udgm.interference_range,
            success: udgm.success_ratio,
            bitrate: sizes.bitrate,
        };
        let nodes = (0..n_nodes as NodeId)
            .map(|n| MacNode {
                state: if t.mode == RdcMode::AlwaysOn { St::Idle } else { St::Off },
                since: SimTime::ZERO,
                queue: VecDeque::new(),
                in_flight: false,
                retry: None,
                train_end: None,
                lpt: None,
                lpt_deadline: None,
                probe: None,
                next_seq: 0,
                last_seen: BTreeMap::new(),
                ledger: RadioLedger::default(),
                backoff_rng: stream(seed, StreamId::new(Purpose::Mac, n)),
                loss_rng: stream(seed, StreamId::new(Purpose::Radio, n)),
            })
            .collect();
        Radio {
            t,
            nodes,
            carriers: BTreeMap::new(),
            next_carrier: 0,
            t_end,
            activity: record_activity.then(Vec::new),
        }
    }

    pub fn wake_interval(&self) -> SimTime {
        SimTime::from_ticks(self.t.wake)
    }

    /// Schedules the first wake of every duty-cycled node at a random phase.
    pub fn start<S: RadioScheduler>(&mut self, sched: &mut S, seed: u64) {
        if self.t.mode == RdcMode::AlwaysOn {
            return;
        }
        for n in 0..self.nodes.len() as NodeId {
            let mut r = stream(seed, StreamId::new(Purpose::WakePhase, n));
            let phase = r.random_range(0..self.t.wake);
            sched.at(SimTime::from_ticks(phase), RadioEvent::Wake(n));
        }
    }

    pub fn queue_len(&self, node: NodeId) -> usize {
        self.nodes[node as usize].queue.len()
    }

    /// Queues a frame; the MAC assigns its sequence number.
    pub fn send<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        mut frame: Frame<B>,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let m = &mut self.nodes[node as usize];
        frame.src = node;
        frame.seq = m.next_seq;
        m.next_seq += 1;
        if m.queue.len() >= QUEUE_CAPACITY {
            out.push(MacOutput::SendDone {
                node,
                frame,
                status: SendStatus::QueueFull,
                attempts: 0,
            });
            return;
        }
        m.queue.push_back(Outgoing {
            frame,
            attempts: 0,
            backoffs: 0,
        });
        self.kick(env, sched, node, now, out);
    }

    pub fn handle<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        ev: RadioEvent,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        match ev {
            RadioEvent::Wake(n) => self.on_wake(env, sched, n, now),
            RadioEvent::CopyEnd { node, carrier } => self.on_copy_end(env, sched, node, carrier, now, out),
            RadioEvent::AckArrival { node, train, ack } => {
                self.on_ack_arrival(env, sched, node, train, ack, now, out)
            }
            RadioEvent::TrainEnd { node, carrier } => {
                let m = &mut self.nodes[node as usize];
                if m.state == (St::Transmitting { carrier }) {
                    m.train_end = None;
                    // an ack may be due at exactly this tick
                    let due = match self.carriers.get(&carrier).map(|c| &c.kind) {
                        Some(CarrierKind::Train {
                            ack_pending: Some((ack, at)),
                            ..
                        }) if *at == now => Some(*ack),
                        _ => None,
                    };
                    if let Some(ack) = due {
                        if self.try_accept_ack(env, sched, node, carrier, ack, now, out) {
                            return;
                        }
                    }
                    self.finish_train(env, sched, node, now, false, out);
                }
            }
            RadioEvent::Retry(n) => {
                self.nodes[n as usize].retry = None;
                self.kick(env, sched, n, now, out);
            }
            RadioEvent::ProbeEnd(n) => self.on_probe_end(env, sched, n, now, out),
            RadioEvent::LptDeadline(n) => self.on_lpt_deadline(env, sched, n, now, out),
        }
    }

    /// Closes every open interval at `t_end` and returns per-node ledgers.
    pub fn finish(&mut self) -> Vec<RadioLedger> {
        let t_end = self.t_end;
        for n in 0..self.nodes.len() {
            self.settle(n, t_end);
            let st = self.nodes[n].state;
            match st {
                St::Sampling { until } => {
                    let since = self.nodes[n].since;
                    self.listen(n, since, until.min(t_end));
                }
                s if s.listening() => {
                    let since = self.nodes[n].since;
                    self.listen(n, since, t_end);
                }
                St::Transmitting { carrier } => self.account_train(n, carrier, t_end),
                St::Probing => {
                    let since = self.nodes[n].since;
                    self.transmit(n, since, t_end);
                }
                _ => {}
            }
            self.nodes[n].state = St::Off;
            self.nodes[n].since = t_end;
        }
        self.nodes
            .iter()
            .map(|m| {
                let mut l = m.ledger;
                l.off_ticks = t_end.ticks() - l.tx_ticks - l.listen_ticks;
                l
            })
            .collect()
    }

    pub fn take_activity(&mut self) -> Vec<RadioActivity> {
        self.activity.take().unwrap_or_default()
    }

    // ------------------------------------------------------------ accounting

    fn log(&mut self, n: usize, state: RadioState, a: SimTime, b: SimTime) {
        if let Some(act) = self.activity.as_mut() {
            act.push(RadioActivity {
                node: n as NodeId,
                state,
                start: a,
                end: b,
            });
        }
    }

    fn listen(&mut self, n: usize, a: SimTime, b: SimTime) {
        let b = b.min(self.t_end);
        if b > a {
            self.nodes[n].ledger.listen_ticks += (b - a).ticks();
            self.log(n, RadioState::Listen, a, b);
        }
    }

    fn transmit(&mut self, n: usize, a: SimTime, b: SimTime) {
        let b = b.min(self.t_end);
        if b > a {
            self.nodes[n].ledger.tx_ticks += (b - a).ticks();
            self.log(n, RadioState::Transmit, a, b);
        }
    }

    /// Splits a train into per-copy transmit segments and the listen windows between them.
    fn account_train(&mut self, n: usize, id: u64, upto: SimTime) {
        let c = &self.carriers[&id];
        let (airtime, period, copies) = match c.kind {
            CarrierKind::Train {
                airtime,
                period,
                copies,
                ..
            } => (airtime, period, copies),
            _ => unreachable!("only trains are split"),
        };
        let start = c.start;
        let unicast = !train_frame(c).dst.is_broadcast();
        let end = upto.min(c.end);
        for k in 0..copies {
            let cs = start + SimTime::from_ticks(k * period);
            if cs >= end {
                break;
            }
            let ce = cs + SimTime::from_ticks(airtime);
            self.transmit(n, cs, ce.min(end));
            let window = if k + 1 < copies {
                cs + SimTime::from_ticks(period)
            } else if unicast {
                ce + SimTime::from_ticks(self.t.ack)
            } else {
                ce
            };
            self.listen(n, ce, window.min(end));
        }
    }

    /// Expires lazily-ending states.
    fn settle(&mut self, n: usize, now: SimTime) {
        match self.nodes[n].state {
            St::Sampling { until } if until <= now => {
                let since = self.nodes[n].since;
                self.listen(n, since, until);
                self.nodes[n].state = St::Off;
                self.nodes[n].since = until;
            }
            St::Acking { until } if until <= now => {
                self.nodes[n].state = if self.t.mode == RdcMode::AlwaysOn { St::Idle } else { St::Off };
                self.nodes[n].since = until;
            }
            _ => {}
        }
    }

    fn close_listen(&mut self, n: usize, now: SimTime) {
        if self.nodes[n].state.listening() {
            let since = self.nodes[n].since;
            self.listen(n, since, now);
        }
        self.nodes[n].since = now;
    }

    // ------------------------------------------------------------ channel

    fn in_range(&self, env: &dyn MacEnv<B>, a: NodeId, b: NodeId, t: SimTime, range: f64) -> bool {
        env.position(a, t).dist(env.position(b, t)) <= range
    }

    /// True if no carrier other than `exclude` overlaps `[from, to)` within
    /// interference range of `rx`.
    fn clean(&self, env: &dyn MacEnv<B>, rx: NodeId, exclude: &[u64], from: SimTime, to: SimTime) -> bool {
        let p = env.position(rx, to);
        !self.carriers.iter().any(|(id, c)| {
            !exclude.contains(id)
                && c.start < to
                && c.air_end > from
                && env.position(c.src, to).dist(p) <= self.t.intf_range
        })
    }

    fn busy(&self, env: &dyn MacEnv<B>, n: NodeId, now: SimTime) -> bool {
        let p = env.position(n, now);
        self.carriers.values().any(|c| {
            c.src != n
                && c.start <= now
                && now < c.air_end
                && env.position(c.src, now).dist(p) <= self.t.intf_range
        })
    }

    fn draw_success(&mut self, n: usize) -> bool {
        self.t.success >= 1.0 || self.nodes[n].loss_rng.random::<f64>() < self.t.success
    }

    fn add_carrier(&mut self, c: Carrier<B>, now: SimTime) -> u64 {
        if self.carriers.len() > 64 {
            self.carriers
                .retain(|_, c| c.end.ticks() + 8192 > now.ticks());
        }
        let id = self.next_carrier;
        self.next_carrier += 1;
        self.carriers.insert(id, c);
        id
    }

    // ------------------------------------------------------------ sending

    fn kick<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let n = node as usize;
        loop {
            let m = &self.nodes[n];
            if m.in_flight || m.retry.is_some() || m.queue.is_empty() {
                return;
            }
            self.settle(n, now);
            match self.nodes[n].state {
                St::Receiving { .. } | St::Transmitting { .. } | St::Probing | St::Waiting => return,
                St::Acking { until } => {
                    self.nodes[n].retry = Some(sched.at(until, RadioEvent::Retry(node)));
                    return;
                }
                St::Off | St::Idle | St::Sampling { .. } => {}
            }
            if self.t.mode == RdcMode::Lpt {
                let broadcast = self.nodes[n].queue[0].frame.dst.is_broadcast();
                let wait = if broadcast { self.t.wake } else { LPT_UNICAST_WAIT * self.t.wake };
                let m = &mut self.nodes[n];
                if m.state == St::Off {
                    m.since = now;
                }
                m.state = St::Waiting;
                m.in_flight = true;
                m.lpt = Some(LptWait {
                    expired: false,
                    served: BTreeSet::new(),
                });
                m.lpt_deadline = Some(sched.at(now + SimTime::from_ticks(wait), RadioEvent::LptDeadline(node)));
                return;
            }
            if !self.busy(env, node, now) {
                self.start_train(env, sched, node, now);
                return;
            }
            let w = self.t.wake;
            let m = &mut self.nodes[n];
            let og = m.queue.front_mut().expect("non-empty");
            og.backoffs += 1;
            if og.backoffs <= MAX_BACKOFFS {
                let delay = backoff(w, og.backoffs, &mut m.backoff_rng);
                m.retry = Some(sched.at(now + SimTime::from_ticks(delay), RadioEvent::Retry(node)));
                return;
            }
            let og = m.queue.pop_front().expect("non-empty");
            out.push(MacOutput::SendDone {
                node,
                frame: og.frame,
                status: SendStatus::ChannelBusy,
                attempts: og.attempts,
            });
        }
    }

    fn start_train<S: RadioScheduler>(&mut self, env: &mut dyn MacEnv<B>, sched: &mut S, node: NodeId, now: SimTime) {
        let n = node as usize;
        self.settle(n, now);
        self.close_listen(n, now);
        let og = self.nodes[n].queue.front_mut().expect("train needs a frame");
        env.on_air(node, &mut og.frame.body, now);
        og.attempts += 1;
        let frame = Rc::new(og.frame.clone());
        let a = airtime(frame.bytes, self.t.bitrate).ticks();
        let period = a + self.t.gap;
        let copies = if self.t.mode == RdcMode::Lpl { self.t.wake.div_ceil(period) } else { 1 };
        let unicast = !frame.dst.is_broadcast();
        let air_end = now + SimTime::from_ticks((copies - 1) * period + a);
        let end = air_end + SimTime::from_ticks(if unicast { self.t.ack } else { 0 });
        let id = self.add_carrier(
            Carrier {
                src: node,
                start: now,
                air_end,
                end,
                kind: CarrierKind::Train {
                    frame,
                    airtime: a,
                    period,
                    copies,
                    ack_pending: None,
                },
            },
            now,
        );
        let m = &mut self.nodes[n];
        m.state = St::Transmitting { carrier: id };
        m.since = now;
        m.in_flight = true;
        m.train_end = Some(sched.at(end, RadioEvent::TrainEnd { node, carrier: id }));
        // listeners already awake lock onto the first copy
        let first_end = now + SimTime::from_ticks(a);
        for r in 0..self.nodes.len() {
            if r == n {
                continue;
            }
            self.settle(r, now);
            let resume = match self.nodes[r].state {
                St::Idle => Some(now),
                St::Sampling { until } if until > now => Some(until),
                _ => None,
            };
            if let Some(resume) = resume.filter(|_| self.in_range(env, node, r as NodeId, now, self.t.tx_range)) {
                self.nodes[r].state = St::Receiving {
                    carrier: id,
                    copy_end: first_end,
                    resume,
                };
                sched.at(
                    first_end,
                    RadioEvent::CopyEnd {
                        node: r as NodeId,
                        carrier: id,
                    },
                );
            }
        }
    }

    fn finish_train<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        now: SimTime,
        acked: bool,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let n = node as usize;
        let St::Transmitting { carrier } = self.nodes[n].state else {
            return;
        };
        self.account_train(n, carrier, now);
        if let Some(c) = self.carriers.get_mut(&carrier) {
            c.end = c.end.min(now);
            c.air_end = c.air_end.min(now);
        }
        let m = &mut self.nodes[n];
        if let Some(h) = m.train_end.take() {
            sched.cancel(h);
        }
        m.state = if self.t.mode == RdcMode::AlwaysOn { St::Idle } else { St::Off };
        m.since = now;
        let broadcast = m.queue[0].frame.dst.is_broadcast();
        if broadcast {
            if let Some(w) = &m.lpt {
                if !w.expired && m.lpt_deadline.is_some() {
                    // keep serving probing neighbors until the deadline
                    m.state = St::Waiting;
                    return;
                }
            }
            let og = m.queue.pop_front().expect("in flight");
            out.push(MacOutput::SendDone {
                node,
                frame: og.frame,
                status: SendStatus::Broadcast,
                attempts: og.attempts,
            });
        } else if acked {
            let og = m.queue.pop_front().expect("in flight");
            out.push(MacOutput::SendDone {
                node,
                frame: og.frame,
                status: SendStatus::Acked,
                attempts: og.attempts,
            });
        } else if m.queue[0].attempts < MAX_ATTEMPTS {
            let delay = backoff(self.t.wake, m.queue[0].attempts, &mut m.backoff_rng);
            m.retry = Some(sched.at(now + SimTime::from_ticks(delay), RadioEvent::Retry(node)));
        } else {
            let og = m.queue.pop_front().expect("in flight");
            out.push(MacOutput::SendDone {
                node,
                frame: og.frame,
                status: SendStatus::NoAck,
                attempts: og.attempts,
            });
        }
        m.in_flight = false;
        m.lpt = None;
        if let Some(h) = m.lpt_deadline.take() {
            sched.cancel(h);
        }
        self.kick(env, sched, node, now, out);
    }

    // ------------------------------------------------------------ receiving

    fn on_wake<S: RadioScheduler>(&mut self, env: &mut dyn MacEnv<B>, sched: &mut S, node: NodeId, w: SimTime) {
        let n = node as usize;
        sched.at(w + SimTime::from_ticks(self.t.wake), RadioEvent::Wake(node));
        self.settle(n, w);
        if self.nodes[n].state != St::Off {
            return;
        }
        if self.t.mode == RdcMode::Lpt {
            let until = w + SimTime::from_ticks(self.t.probe);
            let id = self.add_carrier(
                Carrier {
                    src: node,
                    start: w,
                    air_end: until,
                    end: until,
                    kind: CarrierKind::Probe,
                },
                w,
            );
            let m = &mut self.nodes[n];
            m.state = St::Probing;
            m.since = w;
            m.probe = Some(id);
            sched.at(until, RadioEvent::ProbeEnd(node));
            return;
        }
        let window_end = w + SimTime::from_ticks(self.t.sample);
        let mut best: Option<(SimTime, u64, SimTime)> = None;
        for (&id, c) in &self.carriers {
            let CarrierKind::Train {
                airtime,
                period,
                copies,
                ..
            } = c.kind
            else {
                continue;
            };
            if c.src == node || c.air_end <= w {
                continue;
            }
            let k = if w > c.start { (w - c.start).ticks().div_ceil(period) } else { 0 };
            if k >= copies {
                continue;
            }
            let cs = c.start + SimTime::from_ticks(k * period);
            let ce = cs + SimTime::from_ticks(airtime);
            if cs >= window_end || ce > c.air_end {
                continue;
            }
            if best.is_some_and(|(b, _, _)| b <= cs) {
                continue;
            }
            if self.in_range(env, c.src, node, w, self.t.tx_range) {
                best = Some((cs, id, ce));
            }
        }
        let m = &mut self.nodes[n];
        m.since = w;
        match best {
            Some((_, id, ce)) => {
                m.state = St::Receiving {
                    carrier: id,
                    copy_end: ce,
                    resume: window_end,
                };
                sched.at(ce, RadioEvent::CopyEnd { node, carrier: id });
            }
            None => m.state = St::Sampling { until: window_end },
        }
    }

    fn on_copy_end<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        carrier: u64,
        ce: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let n = node as usize;
        let resume = match self.nodes[n].state {
            St::Receiving {
                carrier: c,
                copy_end,
                resume,
            } if c == carrier && copy_end == ce => resume,
            _ => return,
        };
        let (src, frame, airtime) = match self.carriers.get(&carrier) {
            Some(c) => match &c.kind {
                CarrierKind::Train { frame, airtime, .. } => (c.src, Rc::clone(frame), *airtime),
                _ => unreachable!("receivers only lock onto trains"),
            },
            None => unreachable!("carrier pruned while referenced"),
        };
        let cs = ce - SimTime::from_ticks(airtime);
        let covered = self.carriers[&carrier].air_end >= ce;
        let ok = covered
            && self.in_range(env, src, node, ce, self.t.tx_range)
            && self.clean(env, node, &[carrier], cs, ce)
            && self.draw_success(n);
        self.close_listen(n, ce);
        let for_me = frame.dst == Dest::Unicast(node);
        let guard = SimTime::from_ticks(self.t.gap);
        let idle = if self.t.mode == RdcMode::AlwaysOn {
            St::Idle
        } else {
            St::Sampling {
                until: (ce + guard).max(resume),
            }
        };
        self.nodes[n].state = idle;
        if ok && (for_me || frame.dst.is_broadcast()) {
            let m = &mut self.nodes[n];
            let dup = m.last_seen.get(&src).is_some_and(|&s| s >= frame.seq);
            if !dup {
                m.last_seen.insert(src, frame.seq);
            }
            if for_me {
                let until = ce + SimTime::from_ticks(self.t.ack);
                let ack = self.add_carrier(
                    Carrier {
                        src: node,
                        start: ce,
                        air_end: until,
                        end: until,
                        kind: CarrierKind::Ack,
                    },
                    ce,
                );
                if let Some(Carrier {
                    kind: CarrierKind::Train { ack_pending, .. },
                    ..
                }) = self.carriers.get_mut(&carrier)
                {
                    *ack_pending = Some((ack, until));
                }
                self.transmit(n, ce, until);
                self.nodes[n].state = St::Acking { until };
                self.nodes[n].since = until;
                sched.at(until, RadioEvent::AckArrival { node: src, train: carrier, ack });
            }
            if !dup {
                out.push(MacOutput::Received { node, frame });
            }
        }
        self.kick(env, sched, node, ce, out);
    }

    /// Returns true if the ack was received and the train finished.
    fn try_accept_ack<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        train: u64,
        ack: u64,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) -> bool {
        let n = node as usize;
        let Some(c) = self.carriers.get(&train) else {
            return false;
        };
        let (airtime, period, start) = match c.kind {
            CarrierKind::Train { airtime, period, .. } => (airtime, period, c.start),
            _ => return false,
        };
        let Dest::Unicast(rx) = train_frame(c).dst else {
            return false;
        };
        let from = now - SimTime::from_ticks(self.t.ack);
        let ok = self.in_range(env, rx, node, now, self.t.tx_range)
            && self.clean(env, node, &[train, ack], from, now)
            && self.draw_success(n);
        if !ok {
            return false;
        }
        // truncate the train after the acknowledged copy
        let k = (from - start).ticks().saturating_sub(airtime) / period;
        if let Some(Carrier {
            kind: CarrierKind::Train { copies, ack_pending, .. },
            air_end,
            end,
            ..
        }) = self.carriers.get_mut(&train)
        {
            *copies = k + 1;
            *ack_pending = None;
            *air_end = from;
            *end = now;
        }
        self.finish_train(env, sched, node, now, true, out);
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn on_ack_arrival<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        train: u64,
        ack: u64,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        if self.nodes[node as usize].state != (St::Transmitting { carrier: train }) {
            return;
        }
        if !self.try_accept_ack(env, sched, node, train, ack, now, out) {
            if let Some(Carrier {
                kind: CarrierKind::Train { ack_pending, .. },
                ..
            }) = self.carriers.get_mut(&train)
            {
                *ack_pending = None;
            }
        }
    }

    // ------------------------------------------------------------ low-power transmit

    fn on_probe_end<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        pe: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let n = node as usize;
        if self.nodes[n].state != St::Probing {
            return;
        }
        let since = self.nodes[n].since;
        self.transmit(n, since, pe);
        let probe = self.nodes[n].probe.take().expect("probing node has a probe");
        self.nodes[n].state = St::Sampling {
            until: pe + SimTime::from_ticks(self.t.sample),
        };
        self.nodes[n].since = pe;
        for r in 0..self.nodes.len() {
            if r == n || self.nodes[r].state != St::Waiting {
                continue;
            }
            let Some(front) = self.nodes[r].queue.front() else {
                continue;
            };
            let wants = match front.frame.dst {
                Dest::Unicast(d) => d == node,
                Dest::Broadcast => !self.nodes[r]
                    .lpt
                    .as_ref()
                    .is_some_and(|w| w.served.contains(&node)),
            };
            if !wants
                || !self.in_range(env, node, r as NodeId, pe, self.t.tx_range)
                || !self.clean(env, r as NodeId, &[probe], since, pe)
                || !self.draw_success(r)
            {
                continue;
            }
            if let Some(w) = self.nodes[r].lpt.as_mut() {
                w.served.insert(node);
            }
            self.start_train(env, sched, r as NodeId, pe);
        }
        self.kick(env, sched, node, pe, out);
    }

    fn on_lpt_deadline<S: RadioScheduler>(
        &mut self,
        env: &mut dyn MacEnv<B>,
        sched: &mut S,
        node: NodeId,
        now: SimTime,
        out: &mut Vec<MacOutput<B>>,
    ) {
        let n = node as usize;
        self.nodes[n].lpt_deadline = None;
        if self.nodes[n].lpt.is_none() {
            return;
        }
        if let St::Transmitting { .. } = self.nodes[n].state {
            if let Some(w) = self.nodes[n].lpt.as_mut() {
                w.expired = true;
            }
            return;
        }
        self.close_listen(n, now);
        let m = &mut self.nodes[n];
        m.state = St::Off;
        m.lpt = None;
        m.in_flight = false;
        let og = m.queue.pop_front().expect("waiting node has a frame");
        let status = if og.frame.dst.is_broadcast() {
            SendStatus::Broadcast
        } else {
            SendStatus::NoProbe
        };
        out.push(MacOutput::SendDone {
            node,
            frame: og.frame,
            status,
            attempts: og.attempts,
        });
        self.kick(env, sched, node, now, out);
    }
}

fn train_frame<B>(c: &Carrier<B>) -> &Frame<B> {
    match &c.kind {
        CarrierKind::Train { frame, .. } => frame,
        _ => unreachable!("not a train"),
    }
}
