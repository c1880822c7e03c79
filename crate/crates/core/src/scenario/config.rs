use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::kernel::SimTime;
use crate::mobility::{AreaBounds, ModelConfig, Pos};
use crate::power::PowerModel;
use crate::radio::{FrameSizes, RdcConfig, UdgmConfig};
use crate::rpl::RplConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(msg.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliesTo {
    #[default]
    All,
    SendersOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobileSpec {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub applies_to: AppliesTo,
}

/// Either the string `"static"` or a mobile spec object.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MobilitySpec {
    #[default]
    Static,
    Mobile(MobileSpec),
}

impl MobilitySpec {
    pub fn is_static(&self) -> bool {
        matches!(self, MobilitySpec::Static)
    }
}

impl Serialize for MobilitySpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MobilitySpec::Static => s.serialize_str("static"),
            MobilitySpec::Mobile(m) => m.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MobilitySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "static" => Ok(MobilitySpec::Static),
            serde_json::Value::String(s) => Err(D::Error::custom(format!(
                "mobility: expected \"static\" or an object, got \"{s}\""
            ))),
            v @ serde_json::Value::Object(_) => MobileSpec::deserialize(v)
                .map(MobilitySpec::Mobile)
                .map_err(|e| D::Error::custom(format!("mobility: {e}"))),
            other => Err(D::Error::custom(format!(
                "mobility: expected \"static\" or an object, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub udgm: UdgmConfig,
    pub rdc: RdcConfig,
    pub frames: FrameSizes,
}

/// Synthetic CPU cost, seconds per item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpuCost {
    /// Per control-plane message handled or sent.
    pub message: f64,
    /// Per timer, wake or application event.
    pub event: f64,
}

impl Default for CpuCost {
    fn default() -> Self {
        CpuCost {
            message: 0.001,
            event: 0.0002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogFlags {
    pub events: bool,
    pub radio: bool,
    pub control: bool,
}

impl LogFlags {
    pub fn any(&self) -> bool {
        self.events || self.radio || self.control
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area: AreaBounds,
    pub n_nodes: usize,
    pub n_sinks: usize,
    /// Fixed start positions, one per node; uniform random placement when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Pos>>,
    pub mobility: MobilitySpec,
    /// Seconds of simulated time.
    pub duration: f64,
    pub data_period: f64,
    /// First application send happens at `app_start + U[0, app_jitter)`.
    pub app_start: f64,
    pub app_jitter: f64,
    pub repetitions: u32,
    pub seed: u64,
    pub radio: RadioSection,
    pub rpl: RplConfig,
    pub power: PowerModel,
    pub cpu: CpuCost,
    /// Period of neighbor-set resampling and live invariant checks, seconds.
    pub resample_interval: f64,
    pub check_invariants: bool,
    pub logs: LogFlags,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area: AreaBounds {
                width: 200.0,
                height: 200.0,
            },
            n_nodes: 50,
            n_sinks: 1,
            positions: None,
            mobility: MobilitySpec::Static,
            duration: 3600.0,
            data_period: 60.0,
            app_start: 120.0,
            app_jitter: 60.0,
            repetitions: 20,
            seed: 1,
            radio: RadioSection::default(),
            rpl: RplConfig::default(),
            power: PowerModel::default(),
            cpu: CpuCost::default(),
            resample_interval: 1.0,
            check_invariants: true,
            logs: LogFlags::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.area.validate().map_err(invalid)?;
        if self.n_nodes < 2 {
            return Err(invalid("n_nodes must be at least 2"));
        }
        if self.n_sinks == 0 || self.n_sinks >= self.n_nodes {
            return Err(invalid(format!(
                "n_sinks must satisfy 1 <= n_sinks < n_nodes, got {} of {}",
                self.n_sinks, self.n_nodes
            )));
        }
        if let Some(ps) = &self.positions {
            if ps.len() != self.n_nodes {
                return Err(invalid(format!("positions lists {} nodes, n_nodes is {}", ps.len(), self.n_nodes)));
            }
            if let Some((i, _)) = ps.iter().enumerate().find(|(_, p)| !self.area.contains(**p)) {
                return Err(invalid(format!("position of node {i} lies outside the area")));
            }
        }
        for (name, v) in [
            ("duration", self.duration),
            ("data_period", self.data_period),
            ("resample_interval", self.resample_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("app_start", self.app_start), ("app_jitter", self.app_jitter)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if SimTime::from_secs(self.duration) == SimTime::ZERO {
            return Err(invalid("duration rounds to zero ticks"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.cpu.message < 0.0 || self.cpu.event < 0.0 {
            return Err(invalid("cpu costs must be non-negative"));
        }
        if let MobilitySpec::Mobile(m) = &self.mobility {
            m.model.validate(self.area).map_err(invalid)?;
        }
        self.radio.udgm.validate().map_err(invalid)?;
        self.radio.rdc.validate().map_err(invalid)?;
        self.radio.frames.validate().map_err(invalid)?;
        self.rpl.validate().map_err(invalid)?;
        self.power.validate().map_err(invalid)?;
        Ok(())
    }

    pub fn t_end(&self) -> SimTime {
        SimTime::from_secs(self.duration)
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text, &path.display().to_string())
}
