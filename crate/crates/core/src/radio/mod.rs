//! Unit-disk medium, frames and the duty-cycled MAC.

mod mac;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{EventHandle, EventQueue, NodeId, SimTime, TICKS_PER_SECOND};
use crate::mobility::Pos;

pub use mac::{MacEnv, MacOutput, Radio, RadioLedger, SendStatus};

#[derive(Debug, Error)]
pub enum RadioConfigError {
    #[error("tx_range must be positive and not exceed interference_range")]
    Range,
    #[error("success_ratio must lie in [0, 1]")]
    SuccessRatio,
    #[error("channel_check_rate must be positive")]
    CheckRate,
    #[error("wake_sample_duration must be positive and shorter than the wake interval")]
    SampleDuration,
    #[error("strobe_gap must be positive")]
    StrobeGap,
    #[error("frame sizes and bitrate must be positive")]
    FrameSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UdgmConfig {
    pub tx_range: f64,
    pub interference_range: f64,
    pub success_ratio: f64,
}

impl Default for UdgmConfig {
    fn default() -> Self {
        UdgmConfig {
            tx_range: 100.0,
            interference_range: 100.0,
            success_ratio: 1.0,
        }
    }
}

impl UdgmConfig {
    pub fn validate(&self) -> Result<(), RadioConfigError> {
        if !(self.tx_range > 0.0 && self.tx_range <= self.interference_range) {
            return Err(RadioConfigError::Range);
        }
        if !(0.0..=1.0).contains(&self.success_ratio) {
            return Err(RadioConfigError::SuccessRatio);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdcMode {
    Lpl,
    Lpt,
    AlwaysOn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdcConfig {
    pub mode: RdcMode,
    /// Hz.
    pub channel_check_rate: f64,
    /// Seconds.
    pub wake_sample_duration: f64,
    /// Seconds.
    pub strobe_gap: f64,
}

impl Default for RdcConfig {
    fn default() -> Self {
        RdcConfig {
            mode: RdcMode::Lpl,
            channel_check_rate: 8.0,
            wake_sample_duration: 0.004,
            strobe_gap: 0.0004,
        }
    }
}

impl RdcConfig {
    pub fn wake_interval(&self) -> SimTime {
        SimTime::from_secs(1.0 / self.channel_check_rate)
    }

    pub fn validate(&self) -> Result<(), RadioConfigError> {
        if !(self.channel_check_rate.is_finite() && self.channel_check_rate > 0.0) {
            return Err(RadioConfigError::CheckRate);
        }
        let sample = SimTime::from_secs(self.wake_sample_duration);
        if sample == SimTime::ZERO || sample >= self.wake_interval() {
            return Err(RadioConfigError::SampleDuration);
        }
        if SimTime::from_secs(self.strobe_gap) == SimTime::ZERO {
            return Err(RadioConfigError::StrobeGap);
        }
        Ok(())
    }
}

/// Frame sizes in bytes and the link bitrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSizes {
    pub bitrate: u64,
    pub dio: u32,
    pub dao: u32,
    pub dis: u32,
    pub data: u32,
    pub ack: u32,
    pub probe: u32,
    pub nd: u32,
}

impl Default for FrameSizes {
    fn default() -> Self {
        FrameSizes {
            bitrate: 250_000,
            dio: 76,
            dao: 44,
            dis: 6,
            data: 60,
            ack: 12,
            probe: 12,
            nd: 40,
        }
    }
}

impl FrameSizes {
    pub fn validate(&self) -> Result<(), RadioConfigError> {
        let all = [self.dio, self.dao, self.dis, self.data, self.ack, self.probe, self.nd];
        if self.bitrate == 0 || all.contains(&0) {
            return Err(RadioConfigError::FrameSize);
        }
        Ok(())
    }

    pub fn airtime(&self, bytes: u32) -> SimTime {
        airtime(bytes, self.bitrate)
    }
}

/// `ceil(bytes * 8 / bitrate * 32768)` ticks.
pub fn airtime(bytes: u32, bitrate: u64) -> SimTime {
    let bits = bytes as u128 * 8 * TICKS_PER_SECOND as u128;
    let br = bitrate as u128;
    SimTime::from_ticks(bits.div_ceil(br) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dest {
    Broadcast,
    Unicast(NodeId),
}

impl Dest {
    pub fn is_broadcast(self) -> bool {
        matches!(self, Dest::Broadcast)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame<B> {
    pub src: NodeId,
    pub dst: Dest,
    /// MAC sequence number, assigned by the radio when queued.
    pub seq: u32,
    pub bytes: u32,
    pub body: B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioState {
    Transmit,
    Listen,
}

impl RadioState {
    pub fn as_str(self) -> &'static str {
        match self {
            RadioState::Transmit => "tx",
            RadioState::Listen => "listen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tx" => Some(RadioState::Transmit),
            "listen" => Some(RadioState::Listen),
            _ => None,
        }
    }
}

/// One radio-on interval of a node; anything not covered is Off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadioActivity {
    pub node: NodeId,
    pub state: RadioState,
    pub start: SimTime,
    pub end: SimTime,
}

/// Kernel events owned by the radio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioEvent {
    Wake(NodeId),
    CopyEnd { node: NodeId, carrier: u64 },
    AckArrival { node: NodeId, train: u64, ack: u64 },
    TrainEnd { node: NodeId, carrier: u64 },
    Retry(NodeId),
    ProbeEnd(NodeId),
    LptDeadline(NodeId),
}

impl RadioEvent {
    pub fn node(&self) -> NodeId {
        match *self {
            RadioEvent::Wake(n)
            | RadioEvent::Retry(n)
            | RadioEvent::ProbeEnd(n)
            | RadioEvent::LptDeadline(n) => n,
            RadioEvent::CopyEnd { node, .. }
            | RadioEvent::AckArrival { node, .. }
            | RadioEvent::TrainEnd { node, .. } => node,
        }
    }

    pub fn kind(&self) -> crate::kernel::EventKind {
        use crate::kernel::EventKind;
        match self {
            RadioEvent::Wake(_) => EventKind::WakeSample,
            RadioEvent::CopyEnd { .. } | RadioEvent::AckArrival { .. } => EventKind::FrameArrival,
            _ => EventKind::TimerExpiry,
        }
    }
}

/// Anything that can time radio events.
pub trait RadioScheduler {
    fn at(&mut self, t: SimTime, ev: RadioEvent) -> EventHandle;
    fn cancel(&mut self, h: EventHandle) -> bool;
}

impl<P: From<RadioEvent>> RadioScheduler for EventQueue<P> {
    fn at(&mut self, t: SimTime, ev: RadioEvent) -> EventHandle {
        self.schedule(t, P::from(ev))
            .expect("radio never schedules into the past")
    }

    fn cancel(&mut self, h: EventHandle) -> bool {
        EventQueue::cancel(self, h)
    }
}

/// Unordered pairs `(i, j)`, `i < j`, within `tx_range` of each other.
pub fn neighbors_in_range(positions: &[Pos], cfg: &UdgmConfig) -> BTreeSet<(NodeId, NodeId)> {
    let mut out = BTreeSet::new();
    for (i, a) in positions.iter().enumerate() {
        for (j, b) in positions.iter().enumerate().skip(i + 1) {
            if a.dist(*b) <= cfg.tx_range {
                out.insert((i as NodeId, j as NodeId));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn airtimes_of_default_frames() {
        let f = FrameSizes::default();
        assert_eq!(f.airtime(12).ticks(), 13);
        assert_eq!(f.airtime(76).ticks(), 80);
        assert_eq!(f.airtime(60).ticks(), 63);
        assert_eq!(f.airtime(6).ticks(), 7);
    }

    #[test]
    fn default_timing() {
        let r = RdcConfig::default();
        assert_eq!(r.wake_interval().ticks(), 4096);
        assert_eq!(SimTime::from_secs(r.wake_sample_duration).ticks(), 131);
        assert_eq!(SimTime::from_secs(r.strobe_gap).ticks(), 13);
        r.validate().unwrap();
    }

    #[test]
    fn range_is_inclusive() {
        let cfg = UdgmConfig::default();
        let p = [Pos::new(0.0, 0.0), Pos::new(100.0, 0.0), Pos::new(200.01, 0.0)];
        let adj = neighbors_in_range(&p, &cfg);
        assert!(adj.contains(&(0, 1)));
        assert!(!adj.contains(&(1, 2)));
    }

    #[test]
    fn invalid_udgm_rejected() {
        let cfg = UdgmConfig {
            tx_range: 120.0,
            ..UdgmConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
