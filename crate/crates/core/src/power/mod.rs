//! Energy accounting and the per-node network metrics.

mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::TICKS_PER_SECOND;
use crate::radio::RadioLedger;

pub use report::{format_num, format_opt, mean, sample_sd, NodeMetrics, NODES_CSV_HEADER};

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("power.{0} must be positive")]
    NotPositive(&'static str),
    #[error("currents must satisfy listen > cpu > lpm")]
    Ordering,
    #[error("{domain} partition broken: {sum} ticks accounted, {elapsed} elapsed")]
    Partition {
        domain: &'static str,
        sum: u64,
        elapsed: u64,
    },
    #[error("accounting {ticks} ticks past the run end")]
    PastEnd { ticks: u64 },
    #[error("{received} received exceeds {sent} sent")]
    Received { sent: u64, received: u64 },
}

/// Supply currents in mA and voltage in V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub i_tx: f64,
    pub i_listen: f64,
    pub i_cpu: f64,
    pub i_lpm: f64,
    pub voltage: f64,
    pub ticks_per_second: u64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            i_tx: 19.5,
            i_listen: 21.5,
            i_cpu: 1.8,
            i_lpm: 0.0545,
            voltage: 3.0,
            ticks_per_second: TICKS_PER_SECOND,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<(), PowerError> {
        for (name, v) in [
            ("i_tx", self.i_tx),
            ("i_listen", self.i_listen),
            ("i_cpu", self.i_cpu),
            ("i_lpm", self.i_lpm),
            ("voltage", self.voltage),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PowerError::NotPositive(name));
            }
        }
        if self.ticks_per_second == 0 {
            return Err(PowerError::NotPositive("ticks_per_second"));
        }
        if !(self.i_listen > self.i_cpu && self.i_cpu > self.i_lpm) {
            return Err(PowerError::Ordering);
        }
        Ok(())
    }

    fn mj(&self, ticks: u64, current: f64) -> f64 {
        ticks as f64 * current * self.voltage / self.ticks_per_second as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McuState {
    Cpu,
    Lpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioBucket {
    Transmit,
    Listen,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Mcu(McuState),
    Radio(RadioBucket),
}

/// Tick buckets of one node over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerLedger {
    pub cpu_ticks: u64,
    pub lpm_ticks: u64,
    pub tx_ticks: u64,
    pub listen_ticks: u64,
    pub off_ticks: u64,
}

impl PowerLedger {
    pub fn account(&mut self, domain: Domain, ticks: u64) {
        let slot = match domain {
            Domain::Mcu(McuState::Cpu) => &mut self.cpu_ticks,
            Domain::Mcu(McuState::Lpm) => &mut self.lpm_ticks,
            Domain::Radio(RadioBucket::Transmit) => &mut self.tx_ticks,
            Domain::Radio(RadioBucket::Listen) => &mut self.listen_ticks,
            Domain::Radio(RadioBucket::Off) => &mut self.off_ticks,
        };
        *slot += ticks;
    }

    /// Completes a ledger from CPU time and a radio ledger; LPM is the remainder.
    pub fn finalize(cpu_ticks: u64, radio: RadioLedger, elapsed: u64) -> Result<Self, PowerError> {
        if cpu_ticks > elapsed {
            return Err(PowerError::PastEnd {
                ticks: cpu_ticks - elapsed,
            });
        }
        let l = PowerLedger {
            cpu_ticks,
            lpm_ticks: elapsed - cpu_ticks,
            tx_ticks: radio.tx_ticks,
            listen_ticks: radio.listen_ticks,
            off_ticks: radio.off_ticks,
        };
        l.check_partition(elapsed)?;
        Ok(l)
    }

    pub fn check_partition(&self, elapsed: u64) -> Result<(), PowerError> {
        let mcu = self.cpu_ticks + self.lpm_ticks;
        if mcu != elapsed {
            return Err(PowerError::Partition {
                domain: "mcu",
                sum: mcu,
                elapsed,
            });
        }
        let radio = self.tx_ticks + self.listen_ticks + self.off_ticks;
        if radio != elapsed {
            return Err(PowerError::Partition {
                domain: "radio",
                sum: radio,
                elapsed,
            });
        }
        Ok(())
    }
}

/// Energy per bucket in millijoules.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Energy {
    pub cpu: f64,
    pub lpm: f64,
    pub tx: f64,
    pub listen: f64,
    pub total: f64,
}

pub fn energy_mj(l: &PowerLedger, m: &PowerModel) -> Energy {
    let cpu = m.mj(l.cpu_ticks, m.i_cpu);
    let lpm = m.mj(l.lpm_ticks, m.i_lpm);
    let tx = m.mj(l.tx_ticks, m.i_tx);
    let listen = m.mj(l.listen_ticks, m.i_listen);
    Energy {
        cpu,
        lpm,
        tx,
        listen,
        total: cpu + lpm + tx + listen,
    }
}

pub fn avg_power_mw(l: &PowerLedger, m: &PowerModel, elapsed_ticks: u64) -> f64 {
    if elapsed_ticks == 0 {
        return 0.0;
    }
    energy_mj(l, m).total / (elapsed_ticks as f64 / m.ticks_per_second as f64)
}

/// Delivery ratio; 1.0 when nothing was sent.
pub fn pdr(sent: u64, received: u64) -> Result<f64, PowerError> {
    if received > sent {
        return Err(PowerError::Received { sent, received });
    }
    Ok(if sent == 0 { 1.0 } else { received as f64 / sent as f64 })
}
