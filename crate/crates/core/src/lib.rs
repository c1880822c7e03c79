//! Deterministic discrete-event simulator for RPL low-power lossy networks.

pub mod kernel;
pub mod mobility;
pub mod power;
pub mod radio;
pub mod rpl;
pub mod scenario;
