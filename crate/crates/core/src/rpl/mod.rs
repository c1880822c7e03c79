//! RPL control plane: neighbor discovery, DODAG formation and repair under
//! a trickle timer, storing-mode downward routes, and the upward data plane.
//!
//! [`RplNode`] is a pure state machine. It never touches the event queue;
//! every handler appends [`Action`]s that the world turns into frames and
//! timers.

mod etx;
mod node;
mod trickle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{NodeId, SimTime};
use crate::radio::FrameSizes;

pub use etx::{EtxEstimator, NO_ACK_PENALTY};
pub use node::{Action, DropReason, ParentEntry, Route, RplNode, RplStats, RplTimer};
pub use trickle::{Trickle, TrickleSchedule};

pub const ROOT_RANK: u16 = 256;
pub const MIN_HOP_RANK_INCREASE: u16 = 256;
pub const INFINITE_RANK: u16 = 65535;
pub const DODAG_VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RplConfigError {
    #[error("rpl.{0} must be positive")]
    NotPositive(&'static str),
    #[error("rpl.etx_alpha must lie in [0, 1), got {0}")]
    Alpha(f64),
    #[error("rpl.doublings must be at most 20, got {0}")]
    Doublings(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeRole {
    Sink,
    Sender,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Sink => "sink",
            NodeRole::Sender => "sender",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sink" => Some(NodeRole::Sink),
            "sender" => Some(NodeRole::Sender),
            _ => None,
        }
    }
}

/// Objective code point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ocp {
    Of0,
    Mrhof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RplConfig {
    pub instance_id: u8,
    /// Objective function shared by every DODAG of the instance.
    pub ocp: Ocp,
    pub min_hop_rank_increase: u16,
    /// Largest rank above the lowest rank held since joining that a node accepts.
    pub max_rank_increase: u16,
    /// Trickle minimum interval, seconds.
    pub i_min: f64,
    pub doublings: u32,
    pub k: u32,
    pub dao_interval: f64,
    pub route_lifetime: f64,
    pub dao_retry: f64,
    pub dis_interval: f64,
    pub etx_alpha: f64,
    pub parent_fail_limit: u32,
    /// Consecutive trickle intervals of parent silence before eviction.
    pub stale_intervals: u32,
    pub neighbor_cache: usize,
    pub rs_initial_delay: f64,
    pub rs_timeout: f64,
    pub rs_timeout_max: f64,
    pub ra_delay_max: f64,
    pub hop_limit: u8,
}

impl Default for RplConfig {
    fn default() -> Self {
        RplConfig {
            instance_id: 1,
            ocp: Ocp::Mrhof,
            min_hop_rank_increase: MIN_HOP_RANK_INCREASE,
            max_rank_increase: 7 * MIN_HOP_RANK_INCREASE,
            i_min: 4.096,
            doublings: 8,
            k: 10,
            dao_interval: 60.0,
            route_lifetime: 180.0,
            dao_retry: 10.0,
            dis_interval: 30.0,
            etx_alpha: 0.9,
            parent_fail_limit: 3,
            stale_intervals: 3,
            neighbor_cache: 32,
            rs_initial_delay: 1.0,
            rs_timeout: 10.0,
            rs_timeout_max: 60.0,
            ra_delay_max: 0.5,
            hop_limit: 64,
        }
    }
}

impl RplConfig {
    pub fn validate(&self) -> Result<(), RplConfigError> {
        let positive = [
            ("i_min", self.i_min),
            ("dao_interval", self.dao_interval),
            ("route_lifetime", self.route_lifetime),
            ("dao_retry", self.dao_retry),
            ("dis_interval", self.dis_interval),
            ("rs_initial_delay", self.rs_initial_delay),
            ("rs_timeout", self.rs_timeout),
            ("rs_timeout_max", self.rs_timeout_max),
            ("ra_delay_max", self.ra_delay_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RplConfigError::NotPositive(name));
            }
        }
        if self.min_hop_rank_increase == 0 {
            return Err(RplConfigError::NotPositive("min_hop_rank_increase"));
        }
        if self.k == 0 {
            return Err(RplConfigError::NotPositive("k"));
        }
        if self.parent_fail_limit == 0 {
            return Err(RplConfigError::NotPositive("parent_fail_limit"));
        }
        if self.stale_intervals == 0 {
            return Err(RplConfigError::NotPositive("stale_intervals"));
        }
        if self.hop_limit == 0 {
            return Err(RplConfigError::NotPositive("hop_limit"));
        }
        if !(0.0..1.0).contains(&self.etx_alpha) {
            return Err(RplConfigError::Alpha(self.etx_alpha));
        }
        if self.doublings > 20 {
            return Err(RplConfigError::Doublings(self.doublings));
        }
        Ok(())
    }

    pub fn i_min_time(&self) -> SimTime {
        SimTime::from_secs(self.i_min)
    }
}

/// Rank through a parent, or `None` when it would reach [`INFINITE_RANK`].
pub fn compute_rank(ocp: Ocp, parent_rank: u16, link_etx: f64, min_hop: u16) -> Option<u16> {
    let inc = match ocp {
        Ocp::Of0 => min_hop as u64,
        Ocp::Mrhof => ((link_etx.max(1.0) * min_hop as f64).round() as u64).max(1),
    };
    let r = parent_rank as u64 + inc;
    (r < INFINITE_RANK as u64).then_some(r as u16)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaStatus {
    Ok,
    Full,
}

/// Symbolic global prefix announced by border routers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prefix(pub u16);

pub const DEFAULT_PREFIX: Prefix = Prefix(0xaaaa);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlMsg {
    Dio {
        instance: u8,
        dodag_id: NodeId,
        version: u16,
        rank: u16,
        ocp: Ocp,
        /// Rank epoch of the sender, bumped whenever its rank rises.
        epoch: u32,
        /// Sender's current trickle interval.
        interval: SimTime,
    },
    Dao {
        instance: u8,
        target: NodeId,
        dao_seq: u32,
    },
    Dis,
    Rs,
    Ra {
        pio: Prefix,
        co: u8,
        abro: NodeId,
    },
    Ns {
        aro: (NodeId, NodeId),
    },
    Na {
        status: NaStatus,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlKind {
    Dio,
    Dao,
    Dis,
    Rs,
    Ra,
    Ns,
    Na,
}

impl ControlKind {
    pub const ALL: [ControlKind; 7] = [
        ControlKind::Dio,
        ControlKind::Dao,
        ControlKind::Dis,
        ControlKind::Rs,
        ControlKind::Ra,
        ControlKind::Ns,
        ControlKind::Na,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::Dio => "DIO",
            ControlKind::Dao => "DAO",
            ControlKind::Dis => "DIS",
            ControlKind::Rs => "RS",
            ControlKind::Ra => "RA",
            ControlKind::Ns => "NS",
            ControlKind::Na => "NA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ControlKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_nd(self) -> bool {
        matches!(self, ControlKind::Rs | ControlKind::Ra | ControlKind::Ns | ControlKind::Na)
    }
}

impl ControlMsg {
    pub fn kind(&self) -> ControlKind {
        match self {
            ControlMsg::Dio { .. } => ControlKind::Dio,
            ControlMsg::Dao { .. } => ControlKind::Dao,
            ControlMsg::Dis => ControlKind::Dis,
            ControlMsg::Rs => ControlKind::Rs,
            ControlMsg::Ra { .. } => ControlKind::Ra,
            ControlMsg::Ns { .. } => ControlKind::Ns,
            ControlMsg::Na { .. } => ControlKind::Na,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataPacket {
    pub origin: NodeId,
    pub seq: u32,
    /// Links traversed once this copy is received.
    pub hops: u8,
    pub sender_rank: u16,
}

/// Frame payload carried by the radio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Body {
    Control(ControlMsg),
    Data(DataPacket),
}

impl Body {
    pub fn bytes(&self, sizes: &FrameSizes) -> u32 {
        match self {
            Body::Data(_) => sizes.data,
            Body::Control(m) => match m.kind() {
                ControlKind::Dio => sizes.dio,
                ControlKind::Dao => sizes.dao,
                ControlKind::Dis => sizes.dis,
                _ => sizes.nd,
            },
        }
    }

    pub fn control_kind(&self) -> Option<ControlKind> {
        match self {
            Body::Control(m) => Some(m.kind()),
            Body::Data(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_arithmetic() {
        assert_eq!(compute_rank(Ocp::Of0, 256, 3.0, 256), Some(512));
        assert_eq!(compute_rank(Ocp::Mrhof, 256, 1.5, 256), Some(640));
        assert_eq!(compute_rank(Ocp::Mrhof, 65000, 4.0, 256), None);
    }

    #[test]
    fn defaults_validate() {
        RplConfig::default().validate().unwrap();
        let bad = RplConfig {
            etx_alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn control_kind_round_trip() {
        for k in ControlKind::ALL {
            assert_eq!(ControlKind::parse(k.as_str()), Some(k));
        }
    }
}
