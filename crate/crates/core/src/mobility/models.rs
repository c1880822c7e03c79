use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{AreaBounds, MobilityError, MobilityTrace, Pos, TraceBuilder};
use crate::kernel::{NodeId, SimRng, SimTime};

/// Row-stochastic default for the probabilistic random walk: states are
/// 0 = stay, 1 = step backward, 2 = step forward.
pub const DEFAULT_PRW_MATRIX: [[f64; 3]; 3] = [[0.0, 0.5, 0.5], [0.3, 0.7, 0.0], [0.3, 0.0, 0.7]];

const EDGE_EPS: f64 = 1e-9;

fn invalid(msg: impl Into<String>) -> MobilityError {
    MobilityError::InvalidConfig(msg.into())
}

fn check_nonneg(name: &str, v: f64) -> Result<(), MobilityError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a finite non-negative number (got {v})")))
    }
}

fn check_pos(name: &str, v: f64) -> Result<(), MobilityError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive (got {v})")))
    }
}

/// Uniform draw on `[a, b)`; returns `a` when the range is empty.
fn uniform(rng: &mut SimRng, a: f64, b: f64) -> f64 {
    a + (b - a) * rng.random::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Rwp(RwpConfig),
    Rw(RwConfig),
    Rdm(RdmConfig),
    Gm(GmConfig),
    Prw(PrwConfig),
    Bsa(BsaConfig),
    Csm(CsmConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Rwp(RwpConfig::default())
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Rwp(_) => "rwp",
            ModelConfig::Rw(_) => "rw",
            ModelConfig::Rdm(_) => "rdm",
            ModelConfig::Gm(_) => "gm",
            ModelConfig::Prw(_) => "prw",
            ModelConfig::Bsa(_) => "bsa",
            ModelConfig::Csm(_) => "csm",
        }
    }

    pub fn validate(&self, area: AreaBounds) -> Result<(), MobilityError> {
        area.validate()?;
        match self {
            ModelConfig::Rwp(c) => c.validate(),
            ModelConfig::Rw(c) => c.validate(),
            ModelConfig::Rdm(c) => c.validate(),
            ModelConfig::Gm(c) => c.validate(),
            ModelConfig::Prw(c) => c.validate(),
            ModelConfig::Bsa(c) => c.validate(area),
            ModelConfig::Csm(c) => c.validate(area),
        }
    }
}

/// Generates a trace for one node under any model, starting from `start`.
pub fn generate(
    cfg: &ModelConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    match cfg {
        ModelConfig::Rwp(c) => gen_rwp(c, area, start, duration, node, rng),
        ModelConfig::Rw(c) => gen_rw(c, area, start, duration, node, rng),
        ModelConfig::Rdm(c) => gen_rdm(c, area, start, duration, node, rng),
        ModelConfig::Gm(c) => gen_gm(c, area, start, duration, node, rng),
        ModelConfig::Prw(c) => gen_prw(c, area, start, duration, node, rng),
        ModelConfig::Bsa(c) => gen_bsa(c, area, start, duration, node, rng),
        ModelConfig::Csm(c) => gen_csm(c, area, start, duration, node, rng),
    }
}

fn preflight(area: AreaBounds, duration: SimTime) -> Result<(), MobilityError> {
    area.validate()?;
    if duration == SimTime::ZERO {
        return Err(MobilityError::ZeroDuration);
    }
    Ok(())
}

// ---------------------------------------------------------------- RWP

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwpConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub t_pause: f64,
}

impl Default for RwpConfig {
    fn default() -> Self {
        RwpConfig {
            v_min: 0.5,
            v_max: 1.5,
            t_pause: 10.0,
        }
    }
}

impl RwpConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        check_nonneg("v_min", self.v_min)?;
        check_nonneg("v_max", self.v_max)?;
        check_nonneg("t_pause", self.t_pause)?;
        if self.v_min > self.v_max {
            return Err(invalid("v_min must not exceed v_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwpLeg {
    pub dest: Pos,
    pub speed: f64,
}

/// Endless stream of RWP leg draws (destination, speed).
pub struct RwpLegs<'a> {
    cfg: &'a RwpConfig,
    area: AreaBounds,
    rng: &'a mut SimRng,
}

impl<'a> RwpLegs<'a> {
    pub fn new(cfg: &'a RwpConfig, area: AreaBounds, rng: &'a mut SimRng) -> Self {
        RwpLegs { cfg, area, rng }
    }
}

impl Iterator for RwpLegs<'_> {
    type Item = RwpLeg;

    fn next(&mut self) -> Option<RwpLeg> {
        let x = uniform(self.rng, 0.0, self.area.width);
        let y = uniform(self.rng, 0.0, self.area.height);
        let speed = uniform(self.rng, self.cfg.v_min, self.cfg.v_max);
        Some(RwpLeg {
            dest: Pos::new(x, y),
            speed,
        })
    }
}

pub fn gen_rwp(
    cfg: &RwpConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    preflight(area, duration)?;
    if cfg.v_max == 0.0 {
        return Ok(MobilityTrace::stationary(node, start, duration));
    }
    let mut b = TraceBuilder::new(node, start, duration);
    let mut pos = start;
    let mut t = 0.0;
    for leg in RwpLegs::new(cfg, area, rng) {
        t += pos.dist(leg.dest) / leg.speed;
        if !b.push(t, leg.dest, false) {
            break;
        }
        pos = leg.dest;
        if cfg.t_pause > 0.0 {
            t += cfg.t_pause;
            if !b.push(t, pos, false) {
                break;
            }
        }
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- RW

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegMode {
    /// Each leg lasts this many seconds.
    FixedTime(f64),
    /// Each leg covers this many meters.
    FixedDistance(f64),
}

impl LegMode {
    /// Seconds a leg lasts at `speed`.
    pub fn duration(&self, speed: f64) -> f64 {
        match *self {
            LegMode::FixedTime(t) => t,
            LegMode::FixedDistance(d) if speed > 0.0 => d / speed,
            LegMode::FixedDistance(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwConfig {
    pub v_max: f64,
    pub leg: LegMode,
}

impl Default for RwConfig {
    fn default() -> Self {
        RwConfig {
            v_max: 1.5,
            leg: LegMode::FixedTime(10.0),
        }
    }
}

impl RwConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        check_nonneg("v_max", self.v_max)?;
        match self.leg {
            LegMode::FixedTime(t) => check_pos("leg fixed_time", t),
            LegMode::FixedDistance(d) => check_pos("leg fixed_distance", d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwLeg {
    pub direction: f64,
    pub speed: f64,
}

/// Endless stream of independent RW legs: direction on `[0, 2pi)`, speed on `[0, v_max)`.
pub struct RwLegs<'a> {
    v_max: f64,
    rng: &'a mut SimRng,
}

impl<'a> RwLegs<'a> {
    pub fn new(cfg: &RwConfig, rng: &'a mut SimRng) -> Self {
        RwLegs {
            v_max: cfg.v_max,
            rng,
        }
    }
}

impl Iterator for RwLegs<'_> {
    type Item = RwLeg;

    fn next(&mut self) -> Option<RwLeg> {
        let direction = uniform(self.rng, 0.0, TAU);
        let speed = uniform(self.rng, 0.0, self.v_max);
        Some(RwLeg { direction, speed })
    }
}

/// Straight motion for `dur` seconds with specular reflection off the edges.
/// Returns the bounce points and endpoint as (elapsed, position), plus the final velocity.
fn reflect_path(start: Pos, v: (f64, f64), dur: f64, area: AreaBounds) -> (Vec<(f64, Pos)>, (f64, f64)) {
    let (mut vx, mut vy) = v;
    let mut p = start;
    let mut elapsed = 0.0;
    let mut out = Vec::new();
    if vx == 0.0 && vy == 0.0 {
        out.push((dur, p));
        return (out, v);
    }
    let hit = |x: f64, v: f64, span: f64| {
        if v > 0.0 {
            ((span - x) / v).max(0.0)
        } else if v < 0.0 {
            ((0.0 - x) / v).max(0.0)
        } else {
            f64::INFINITY
        }
    };
    loop {
        let remaining = dur - elapsed;
        let tx = hit(p.x, vx, area.width);
        let ty = hit(p.y, vy, area.height);
        let th = tx.min(ty);
        if th >= remaining {
            p = Pos::new(
                (p.x + vx * remaining).clamp(0.0, area.width),
                (p.y + vy * remaining).clamp(0.0, area.height),
            );
            out.push((dur, p));
            return (out, (vx, vy));
        }
        p = Pos::new(
            (p.x + vx * th).clamp(0.0, area.width),
            (p.y + vy * th).clamp(0.0, area.height),
        );
        if tx == th {
            p.x = if vx > 0.0 { area.width } else { 0.0 };
            vx = -vx;
        }
        if ty == th {
            p.y = if vy > 0.0 { area.height } else { 0.0 };
            vy = -vy;
        }
        elapsed += th;
        out.push((elapsed, p));
    }
}

pub fn gen_rw(
    cfg: &RwConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    preflight(area, duration)?;
    let mut b = TraceBuilder::new(node, start, duration);
    let mut t0 = 0.0;
    let mut pos = start;
    'legs: for leg in RwLegs::new(cfg, rng) {
        let dur = cfg.leg.duration(leg.speed);
        let v = (leg.speed * leg.direction.cos(), leg.speed * leg.direction.sin());
        let (path, _) = reflect_path(pos, v, dur, area);
        for (dt, p) in path {
            if !b.push(t0 + dt, p, false) {
                break 'legs;
            }
            pos = p;
        }
        t0 += dur;
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- RDM

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdmConfig {
    pub v_max: f64,
    pub t_pause: f64,
}

impl Default for RdmConfig {
    fn default() -> Self {
        RdmConfig {
            v_max: 1.5,
            t_pause: 10.0,
        }
    }
}

impl RdmConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        check_nonneg("v_max", self.v_max)?;
        check_nonneg("t_pause", self.t_pause)
    }
}

/// Inward normals of the edges `p` rests on.
fn edge_normals(p: Pos, area: AreaBounds) -> Vec<(f64, f64)> {
    let mut n = Vec::with_capacity(2);
    if p.x <= EDGE_EPS {
        n.push((1.0, 0.0));
    } else if p.x >= area.width - EDGE_EPS {
        n.push((-1.0, 0.0));
    }
    if p.y <= EDGE_EPS {
        n.push((0.0, 1.0));
    } else if p.y >= area.height - EDGE_EPS {
        n.push((0.0, -1.0));
    }
    n
}

/// New heading after a pause at `p`: the open half-plane interior of the edge,
/// or the quarter-plane interior at a corner. Interior points draw on `[0, 2pi)`.
pub fn rdm_heading(p: Pos, area: AreaBounds, rng: &mut SimRng) -> f64 {
    let normals = edge_normals(p, area);
    match normals.as_slice() {
        [] => uniform(rng, 0.0, TAU),
        [n] => n.1.atan2(n.0) + uniform(rng, -FRAC_PI_2, FRAC_PI_2),
        [a, b, ..] => (a.1 + b.1).atan2(a.0 + b.0) + uniform(rng, -FRAC_PI_4, FRAC_PI_4),
    }
}

pub fn gen_rdm(
    cfg: &RdmConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    preflight(area, duration)?;
    if cfg.v_max == 0.0 {
        return Ok(MobilityTrace::stationary(node, start, duration));
    }
    let mut b = TraceBuilder::new(node, start, duration);
    let mut pos = start;
    let mut t = 0.0;
    let mut heading = uniform(rng, 0.0, TAU);
    loop {
        // speed on (0, v_max]
        let speed = cfg.v_max * (1.0 - rng.random::<f64>());
        let (vx, vy) = (speed * heading.cos(), speed * heading.sin());
        let tx = if vx > 0.0 {
            (area.width - pos.x) / vx
        } else if vx < 0.0 {
            -pos.x / vx
        } else {
            f64::INFINITY
        };
        let ty = if vy > 0.0 {
            (area.height - pos.y) / vy
        } else if vy < 0.0 {
            -pos.y / vy
        } else {
            f64::INFINITY
        };
        let th = tx.min(ty).max(0.0);
        let mut dest = Pos::new(
            (pos.x + vx * th).clamp(0.0, area.width),
            (pos.y + vy * th).clamp(0.0, area.height),
        );
        if tx <= ty {
            dest.x = if vx > 0.0 { area.width } else { 0.0 };
        }
        if ty <= tx {
            dest.y = if vy > 0.0 { area.height } else { 0.0 };
        }
        t += th;
        if !b.push(t, dest, false) {
            break;
        }
        pos = dest;
        if cfg.t_pause > 0.0 {
            t += cfg.t_pause;
            if !b.push(t, pos, false) {
                break;
            }
        }
        heading = rdm_heading(pos, area, rng);
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- GM

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmConfig {
    pub alpha: f64,
    pub mean_speed: f64,
    pub mean_direction: f64,
    pub sigma_speed: f64,
    pub sigma_direction: f64,
    pub update_interval: f64,
}

impl Default for GmConfig {
    fn default() -> Self {
        GmConfig {
            alpha: 0.75,
            mean_speed: 1.0,
            mean_direction: 0.0,
            sigma_speed: 0.5,
            sigma_direction: 0.5,
            update_interval: 1.0,
        }
    }
}

impl GmConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(format!("alpha must lie in [0, 1] (got {})", self.alpha)));
        }
        check_nonneg("mean_speed", self.mean_speed)?;
        if !self.mean_direction.is_finite() {
            return Err(invalid("mean_direction must be finite"));
        }
        check_nonneg("sigma_speed", self.sigma_speed)?;
        check_nonneg("sigma_direction", self.sigma_direction)?;
        check_pos("update_interval", self.update_interval)
    }
}

/// The Gauss-Markov AR(1) recursion for speed and direction.
#[derive(Debug, Clone)]
pub struct GmProcess {
    pub alpha: f64,
    pub mean_speed: f64,
    pub sigma_speed: f64,
    pub sigma_direction: f64,
    pub speed: f64,
    pub direction: f64,
}

impl GmProcess {
    pub fn new(cfg: &GmConfig, direction: f64) -> Self {
        GmProcess {
            alpha: cfg.alpha,
            mean_speed: cfg.mean_speed,
            sigma_speed: cfg.sigma_speed,
            sigma_direction: cfg.sigma_direction,
            speed: cfg.mean_speed,
            direction,
        }
    }

    /// Advances one update toward `mean_direction` and returns (speed, direction).
    pub fn step(&mut self, rng: &mut SimRng, mean_direction: f64) -> (f64, f64) {
        let a = self.alpha;
        let noise = (1.0 - a * a).max(0.0).sqrt();
        let gs: f64 = rng.sample(StandardNormal);
        let gd: f64 = rng.sample(StandardNormal);
        // pick the branch of the mean closest to the current heading
        let mu = self.direction + wrap_angle(mean_direction - self.direction);
        self.speed = a * self.speed + (1.0 - a) * self.mean_speed + noise * self.sigma_speed * gs;
        self.direction = a * self.direction + (1.0 - a) * mu + noise * self.sigma_direction * gd;
        (self.speed, self.direction)
    }
}

/// Maps an angle to `(-pi, pi]`.
fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn gen_gm(
    cfg: &GmConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    preflight(area, duration)?;
    let buffer = 0.1 * area.width.min(area.height);
    let center = area.center();
    let mut b = TraceBuilder::new(node, start, duration);
    let mut proc = GmProcess::new(cfg, uniform(rng, 0.0, TAU));
    let mut pos = start;
    let mut t0 = 0.0;
    let dt = cfg.update_interval;
    'steps: loop {
        let speed = proc.speed.max(0.0);
        let v = (speed * proc.direction.cos(), speed * proc.direction.sin());
        let (path, v_end) = reflect_path(pos, v, dt, area);
        for (el, p) in path {
            if !b.push(t0 + el, p, false) {
                break 'steps;
            }
            pos = p;
        }
        if v_end != v {
            proc.direction = proc.direction + wrap_angle(v_end.1.atan2(v_end.0) - proc.direction);
        }
        t0 += dt;
        let near_edge = pos.x < buffer
            || pos.y < buffer
            || pos.x > area.width - buffer
            || pos.y > area.height - buffer;
        let mean = if near_edge {
            (center.y - pos.y).atan2(center.x - pos.x)
        } else {
            cfg.mean_direction
        };
        proc.step(rng, mean);
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- PRW

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrwConfig {
    pub matrix_x: [[f64; 3]; 3],
    pub matrix_y: [[f64; 3]; 3],
    pub step_length: f64,
    pub step_interval: f64,
}

impl Default for PrwConfig {
    fn default() -> Self {
        PrwConfig {
            matrix_x: DEFAULT_PRW_MATRIX,
            matrix_y: DEFAULT_PRW_MATRIX,
            step_length: 1.0,
            step_interval: 1.0,
        }
    }
}

fn check_stochastic(name: &str, m: &[[f64; 3]; 3]) -> Result<(), MobilityError> {
    for (i, row) in m.iter().enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid(format!("{name} row {i} has a negative or non-finite entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("{name} row {i} sums to {s}, not 1")));
        }
    }
    Ok(())
}

impl PrwConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        check_stochastic("matrix_x", &self.matrix_x)?;
        check_stochastic("matrix_y", &self.matrix_y)?;
        check_nonneg("step_length", self.step_length)?;
        check_pos("step_interval", self.step_interval)
    }
}

/// One axis of the probabilistic random walk.
#[derive(Debug, Clone)]
pub struct PrwChain {
    pub matrix: [[f64; 3]; 3],
    pub state: usize,
}

impl PrwChain {
    pub fn new(matrix: [[f64; 3]; 3]) -> Self {
        PrwChain { matrix, state: 0 }
    }

    pub fn step(&mut self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let row = &self.matrix[self.state];
        let mut acc = 0.0;
        let mut next = 2;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        // floating slack: never land on a zero-probability state
        while row[next] == 0.0 && next > 0 {
            next -= 1;
        }
        self.state = next;
        next
    }

    /// Swaps backward and forward after a reflection.
    fn mirror(&mut self) {
        self.state = match self.state {
            1 => 2,
            2 => 1,
            s => s,
        };
    }
}

fn prw_axis(x: f64, state: usize, step: f64, span: f64, chain: &mut PrwChain) -> f64 {
    let d = match state {
        1 => -step,
        2 => step,
        _ => 0.0,
    };
    let mut nx = x + d;
    if nx < 0.0 {
        nx = (-nx).min(span);
        chain.mirror();
    } else if nx > span {
        nx = (2.0 * span - nx).max(0.0);
        chain.mirror();
    }
    nx
}

pub fn gen_prw(
    cfg: &PrwConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    preflight(area, duration)?;
    let mut cx = PrwChain::new(cfg.matrix_x);
    let mut cy = PrwChain::new(cfg.matrix_y);
    let mut b = TraceBuilder::new(node, start, duration);
    let mut pos = start;
    let mut t = 0.0;
    loop {
        let sx = cx.step(rng);
        let sy = cy.step(rng);
        pos = Pos::new(
            prw_axis(pos.x, sx, cfg.step_length, area.width, &mut cx),
            prw_axis(pos.y, sy, cfg.step_length, area.height, &mut cy),
        );
        t += cfg.step_interval;
        if !b.push(t, pos, false) {
            break;
        }
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- BSA

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsaConfig {
    pub v_max: f64,
    pub delta_v_max: f64,
    pub delta_theta_max: f64,
    pub update_interval: f64,
}

impl Default for BsaConfig {
    fn default() -> Self {
        BsaConfig {
            v_max: 1.5,
            delta_v_max: 0.2,
            delta_theta_max: 0.3,
            update_interval: 1.0,
        }
    }
}

impl BsaConfig {
    pub fn validate(&self, area: AreaBounds) -> Result<(), MobilityError> {
        check_nonneg("v_max", self.v_max)?;
        check_nonneg("delta_v_max", self.delta_v_max)?;
        check_nonneg("delta_theta_max", self.delta_theta_max)?;
        check_pos("update_interval", self.update_interval)?;
        if self.v_max * self.update_interval >= 0.5 * area.width.min(area.height) {
            return Err(invalid(
                "v_max * update_interval must be under half the smaller area side",
            ));
        }
        Ok(())
    }
}

pub fn gen_bsa(
    cfg: &BsaConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    area.validate()?;
    cfg.validate(area)?;
    preflight(area, duration)?;
    let mut b = TraceBuilder::new(node, start, duration).toroidal(area);
    let mut v = uniform(rng, 0.0, cfg.v_max);
    let mut theta = uniform(rng, 0.0, TAU);
    let mut pos = start;
    let mut t = 0.0;
    loop {
        let dt = cfg.update_interval;
        let rx = pos.x + v * theta.cos() * dt;
        let ry = pos.y + v * theta.sin() * dt;
        let next = Pos::new(rx.rem_euclid(area.width), ry.rem_euclid(area.height));
        let next = Pos::new(
            if next.x >= area.width { 0.0 } else { next.x },
            if next.y >= area.height { 0.0 } else { next.y },
        );
        let wrapped = rx < 0.0 || rx >= area.width || ry < 0.0 || ry >= area.height;
        t += dt;
        if !b.push(t, next, wrapped) {
            break;
        }
        pos = next;
        v = (v + uniform(rng, -cfg.delta_v_max, cfg.delta_v_max)).clamp(0.0, cfg.v_max);
        theta += uniform(rng, -cfg.delta_theta_max, cfg.delta_theta_max);
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- CSM

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsmConfig {
    pub grid_spacing: f64,
    pub speed_limit: f64,
    pub t_pause: f64,
}

impl Default for CsmConfig {
    fn default() -> Self {
        CsmConfig {
            grid_spacing: 50.0,
            speed_limit: 1.5,
            t_pause: 10.0,
        }
    }
}

fn grid_cells(span: f64, spacing: f64) -> Option<u64> {
    let n = span / spacing;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * n.max(1.0) && r >= 1.0).then_some(r as u64)
}

impl CsmConfig {
    pub fn validate(&self, area: AreaBounds) -> Result<(), MobilityError> {
        check_pos("grid_spacing", self.grid_spacing)?;
        check_nonneg("speed_limit", self.speed_limit)?;
        check_nonneg("t_pause", self.t_pause)?;
        if grid_cells(area.width, self.grid_spacing).is_none()
            || grid_cells(area.height, self.grid_spacing).is_none()
        {
            return Err(invalid("grid_spacing must divide both area dimensions"));
        }
        Ok(())
    }
}

pub fn gen_csm(
    cfg: &CsmConfig,
    area: AreaBounds,
    start: Pos,
    duration: SimTime,
    node: NodeId,
    rng: &mut SimRng,
) -> Result<MobilityTrace, MobilityError> {
    area.validate()?;
    cfg.validate(area)?;
    preflight(area, duration)?;
    let s = cfg.grid_spacing;
    let nx = grid_cells(area.width, s).expect("validated");
    let ny = grid_cells(area.height, s).expect("validated");
    let snap = |v: f64, n: u64| ((v / s).round().clamp(0.0, n as f64)) * s;
    let origin = Pos::new(snap(start.x, nx), snap(start.y, ny));
    if cfg.speed_limit == 0.0 {
        return Ok(MobilityTrace::stationary(node, origin, duration));
    }
    let mut b = TraceBuilder::new(node, origin, duration);
    let mut pos = origin;
    let mut t = 0.0;
    loop {
        let dest = Pos::new(
            rng.random_range(0..=nx) as f64 * s,
            rng.random_range(0..=ny) as f64 * s,
        );
        let corner = Pos::new(dest.x, pos.y);
        let t_before = t;
        t += (dest.x - pos.x).abs() / cfg.speed_limit;
        if !b.push(t, corner, false) {
            break;
        }
        t += (dest.y - pos.y).abs() / cfg.speed_limit;
        if !b.push(t, dest, false) {
            break;
        }
        pos = dest;
        if cfg.t_pause > 0.0 {
            t += cfg.t_pause;
            if !b.push(t, pos, false) {
                break;
            }
        } else if t == t_before {
            continue;
        }
    }
    Ok(b.finish())
}
