//! Entity mobility: waypoint traces, the seven synthetic generators, the
//! pairwise mobility metric and the `.movements` text format.

mod metric;
mod models;
mod trace_file;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{NodeId, SimTime, TICKS_PER_SECOND};

pub use metric::{mobility_metric, relative_speed, MetricError};
pub use models::{
    gen_bsa, gen_csm, gen_gm, gen_prw, gen_rdm, gen_rw, gen_rwp, generate, BsaConfig, CsmConfig,
    GmConfig, GmProcess, rdm_heading, LegMode, ModelConfig, PrwChain, PrwConfig, RdmConfig, RwConfig, RwLeg,
    RwLegs, RwpConfig, RwpLeg, RwpLegs, DEFAULT_PRW_MATRIX,
};
pub use trace_file::{format_number, parse_traces, read_traces, write_traces, write_traces_to};

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("invalid mobility configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid area: width and height must be positive (got {width} x {height})")]
    InvalidArea { width: f64, height: f64 },
    #[error("duration must be positive")]
    ZeroDuration,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: waypoint {index} does not advance time")]
    NonMonotone { line: usize, index: usize },
    #[error("line {line}: first waypoint must be at t = 0")]
    BadStart { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rectangle `[0, width] x [0, height]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaBounds {
    pub width: f64,
    pub height: f64,
}

impl AreaBounds {
    pub fn new(width: f64, height: f64) -> Result<Self, MobilityError> {
        let a = AreaBounds { width, height };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite() {
            Ok(())
        } else {
            Err(MobilityError::InvalidArea {
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn contains(&self, p: Pos) -> bool {
        const EPS: f64 = 1e-9;
        p.x >= -EPS && p.x <= self.width + EPS && p.y >= -EPS && p.y <= self.height + EPS
    }

    pub fn center(&self) -> Pos {
        Pos::new(self.width / 2.0, self.height / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pos {
    pub x: f64,
    pub y: f64,
}

impl Pos {
    pub const fn new(x: f64, y: f64) -> Self {
        Pos { x, y }
    }

    pub fn dist(self, other: Pos) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, delta: (f64, f64), frac: f64) -> Pos {
        Pos::new(self.x + delta.0 * frac, self.y + delta.1 * frac)
    }
}

/// Velocity vector in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { vx: 0.0, vy: 0.0 };

    pub fn new(vx: f64, vy: f64) -> Self {
        Velocity { vx, vy }
    }

    pub fn norm(self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn minus(self, other: Velocity) -> Velocity {
        Velocity::new(self.vx - other.vx, self.vy - other.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: SimTime,
    pub pos: Pos,
}

/// Time-ordered waypoints for one node. Consecutive equal positions encode a pause.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    pub node_id: NodeId,
    pub waypoints: Vec<Waypoint>,
    /// Segment indices `i` (from waypoint `i` to `i + 1`) that cross the
    /// toroidal boundary. Only populated for boundless-area traces.
    pub wrap_segments: BTreeSet<usize>,
    /// Fundamental domain used to interpolate wrap segments.
    pub torus: Option<AreaBounds>,
}

impl MobilityTrace {
    pub fn stationary(node_id: NodeId, pos: Pos, duration: SimTime) -> Self {
        let mut waypoints = vec![Waypoint { t: SimTime::ZERO, pos }];
        if duration > SimTime::ZERO {
            waypoints.push(Waypoint { t: duration, pos });
        }
        MobilityTrace {
            node_id,
            waypoints,
            wrap_segments: BTreeSet::new(),
            torus: None,
        }
    }

    pub fn start(&self) -> Pos {
        self.waypoints[0].pos
    }

    pub fn end_time(&self) -> SimTime {
        self.waypoints.last().map(|w| w.t).unwrap_or(SimTime::ZERO)
    }

    pub fn is_stationary(&self) -> bool {
        let p0 = self.start();
        self.waypoints.iter().all(|w| w.pos == p0)
    }

    /// Index of the segment in effect at `t` (right-continuous).
    fn segment_at(&self, t: SimTime) -> usize {
        assert!(
            t <= self.end_time(),
            "trace for node {} queried at tick {} past its end {}",
            self.node_id,
            t,
            self.end_time()
        );
        self.waypoints.partition_point(|w| w.t <= t).saturating_sub(1)
    }

    fn segment_delta(&self, i: usize) -> (f64, f64) {
        let a = self.waypoints[i].pos;
        let b = self.waypoints[i + 1].pos;
        match self.torus {
            Some(area) if self.wrap_segments.contains(&i) => torus_delta(a, b, area),
            _ => (b.x - a.x, b.y - a.y),
        }
    }

    /// Piecewise-linear position at `t`.
    ///
    /// # Panics
    /// If `t` lies beyond the last waypoint.
    pub fn position_at(&self, t: SimTime) -> Pos {
        let i = self.segment_at(t);
        let a = self.waypoints[i];
        if i + 1 == self.waypoints.len() || a.t == t {
            return a.pos;
        }
        let b = self.waypoints[i + 1];
        let frac = (t - a.t).ticks() as f64 / (b.t - a.t).ticks() as f64;
        let p = a.pos.lerp(self.segment_delta(i), frac);
        match self.torus {
            Some(area) if self.wrap_segments.contains(&i) => wrap_into(p, area),
            _ => p,
        }
    }

    /// Velocity of the segment in effect at `t`; at a waypoint the outgoing segment is used.
    pub fn velocity_at(&self, t: SimTime) -> Velocity {
        let i = self.segment_at(t);
        if i + 1 >= self.waypoints.len() {
            return Velocity::ZERO;
        }
        let dt = (self.waypoints[i + 1].t - self.waypoints[i].t).ticks() as f64 / TICKS_PER_SECOND as f64;
        let (dx, dy) = self.segment_delta(i);
        Velocity::new(dx / dt, dy / dt)
    }

    /// Checks the structural invariants: start at zero, strictly increasing times.
    pub fn check(&self) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("trace has no waypoints".into());
        }
        if self.waypoints[0].t != SimTime::ZERO {
            return Err("first waypoint is not at t = 0".into());
        }
        for (i, w) in self.waypoints.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(format!("waypoint {} does not advance time", i + 1));
            }
        }
        Ok(())
    }
}

fn torus_delta(a: Pos, b: Pos, area: AreaBounds) -> (f64, f64) {
    let short = |d: f64, span: f64| {
        let mut d = d.rem_euclid(span);
        if d > span / 2.0 {
            d -= span;
        }
        d
    };
    (short(b.x - a.x, area.width), short(b.y - a.y, area.height))
}

fn wrap_into(p: Pos, area: AreaBounds) -> Pos {
    let w = |v: f64, span: f64| {
        let r = v.rem_euclid(span);
        if r >= span {
            0.0
        } else {
            r
        }
    };
    Pos::new(w(p.x, area.width), w(p.y, area.height))
}

/// Accumulates continuous-time waypoints into a tick-quantized trace that
/// ends exactly at the scenario duration.
pub(crate) struct TraceBuilder {
    node: NodeId,
    end: SimTime,
    end_secs: f64,
    waypoints: Vec<Waypoint>,
    wraps: BTreeSet<usize>,
    torus: Option<AreaBounds>,
    last_t: f64,
    done: bool,
}

impl TraceBuilder {
    pub(crate) fn new(node: NodeId, start: Pos, duration: SimTime) -> Self {
        TraceBuilder {
            node,
            end: duration,
            end_secs: duration.as_secs_f64(),
            waypoints: vec![Waypoint {
                t: SimTime::ZERO,
                pos: start,
            }],
            wraps: BTreeSet::new(),
            torus: None,
            last_t: 0.0,
            done: duration == SimTime::ZERO,
        }
    }

    pub(crate) fn toroidal(mut self, area: AreaBounds) -> Self {
        self.torus = Some(area);
        self
    }

    pub(crate) fn last_pos(&self) -> Pos {
        self.waypoints.last().expect("non-empty").pos
    }

    /// Appends a waypoint at `t` seconds. Returns false once the duration is covered.
    pub(crate) fn push(&mut self, t: f64, pos: Pos, wrapped: bool) -> bool {
        if self.done {
            return false;
        }
        if t >= self.end_secs {
            let last = self.last_pos();
            let span = t - self.last_t;
            let frac = if span > 0.0 && span.is_finite() {
                ((self.end_secs - self.last_t) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let delta = match (self.torus, wrapped) {
                (Some(area), true) => torus_delta(last, pos, area),
                _ => (pos.x - last.x, pos.y - last.y),
            };
            let raw = last.lerp(delta, frac);
            let (p, crossed) = match self.torus {
                Some(area) if wrapped => {
                    let w = wrap_into(raw, area);
                    (w, w != raw)
                }
                _ => (raw, false),
            };
            self.add(self.end, p, crossed);
            self.done = true;
            return false;
        }
        self.add(SimTime::from_secs(t), pos, wrapped);
        self.last_t = t;
        true
    }

    fn add(&mut self, t: SimTime, pos: Pos, wrapped: bool) {
        let n = self.waypoints.len();
        let last = &mut self.waypoints[n - 1];
        if t <= last.t {
            if n > 1 {
                last.pos = pos;
                if wrapped {
                    self.wraps.insert(n - 2);
                }
            }
            return;
        }
        if wrapped {
            self.wraps.insert(n - 1);
        }
        self.waypoints.push(Waypoint { t, pos });
    }

    pub(crate) fn finish(mut self) -> MobilityTrace {
        if !self.done {
            let p = self.last_pos();
            self.add(self.end, p, false);
        }
        if self.torus.is_none() {
            self.wraps.clear();
        }
        MobilityTrace {
            node_id: self.node,
            waypoints: self.waypoints,
            wrap_segments: self.wraps,
            torus: self.torus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn leg_trace() -> MobilityTrace {
        let mut b = TraceBuilder::new(0, Pos::new(0.0, 0.0), secs(30.0));
        b.push(10.0, Pos::new(10.0, 0.0), false);
        b.push(20.0, Pos::new(10.0, 0.0), false);
        b.finish()
    }

    #[test]
    fn position_at_waypoints_and_midpoints() {
        let tr = leg_trace();
        assert_eq!(tr.position_at(secs(10.0)), Pos::new(10.0, 0.0));
        assert_eq!(tr.position_at(secs(5.0)), Pos::new(5.0, 0.0));
        assert_eq!(tr.position_at(secs(15.0)), Pos::new(10.0, 0.0));
        assert_eq!(tr.end_time(), secs(30.0));
    }

    #[test]
    fn velocity_is_right_continuous() {
        let tr = leg_trace();
        assert_eq!(tr.velocity_at(SimTime::ZERO), Velocity::new(1.0, 0.0));
        assert_eq!(tr.velocity_at(secs(10.0)), Velocity::ZERO);
        assert_eq!(tr.velocity_at(secs(12.0)), Velocity::ZERO);
    }

    #[test]
    fn velocity_of_diagonal_leg() {
        let mut b = TraceBuilder::new(0, Pos::new(0.0, 0.0), secs(10.0));
        b.push(10.0, Pos::new(30.0, 40.0), false);
        let tr = b.finish();
        let v = tr.velocity_at(secs(3.0));
        assert!((v.vx - 3.0).abs() < 1e-12 && (v.vy - 4.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_trace_has_two_waypoints() {
        let tr = MobilityTrace::stationary(3, Pos::new(4.0, 5.0), secs(60.0));
        assert_eq!(tr.waypoints.len(), 2);
        assert!(tr.is_stationary());
        assert_eq!(tr.velocity_at(secs(30.0)), Velocity::ZERO);
        tr.check().unwrap();
    }

    #[test]
    fn builder_truncates_at_duration() {
        let mut b = TraceBuilder::new(0, Pos::new(0.0, 0.0), secs(5.0));
        assert!(!b.push(10.0, Pos::new(10.0, 0.0), false));
        let tr = b.finish();
        assert_eq!(tr.end_time(), secs(5.0));
        assert!((tr.position_at(secs(5.0)).x - 5.0).abs() < 1e-9);
    }

    #[test]
    fn wrap_segment_interpolates_short_way() {
        let area = AreaBounds::new(100.0, 100.0).unwrap();
        let mut b = TraceBuilder::new(0, Pos::new(95.0, 50.0), secs(20.0)).toroidal(area);
        b.push(10.0, Pos::new(5.0, 50.0), true);
        let tr = b.finish();
        assert!(tr.wrap_segments.contains(&0));
        let p = tr.position_at(secs(2.5));
        assert!((p.x - 97.5).abs() < 1e-9);
        let p = tr.position_at(secs(7.5));
        assert!((p.x - 2.5).abs() < 1e-9);
        let v = tr.velocity_at(secs(1.0));
        assert!((v.vx - 1.0).abs() < 1e-9);
    }

    #[test]
    #[should_panic]
    fn query_past_end_panics() {
        leg_trace().position_at(secs(31.0));
    }
}
