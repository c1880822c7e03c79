use std::collections::BTreeMap;

use crate::kernel::NodeId;

/// Sample recorded for a unicast that was never acknowledged.
pub const NO_ACK_PENALTY: f64 = 10.0;

/// Per-neighbor EWMA of transmissions per delivered unicast.
#[derive(Debug, Clone)]
pub struct EtxEstimator {
    alpha: f64,
    initial: f64,
    table: BTreeMap<NodeId, f64>,
}

impl EtxEstimator {
    pub fn new(alpha: f64) -> Self {
        EtxEstimator {
            alpha,
            initial: 1.0,
            table: BTreeMap::new(),
        }
    }

    pub fn get(&self, n: NodeId) -> f64 {
        self.table.get(&n).copied().unwrap_or(self.initial)
    }

    pub fn update(&mut self, n: NodeId, sample: f64) -> f64 {
        let old = self.get(n);
        let v = (self.alpha * old + (1.0 - self.alpha) * sample).max(1.0);
        self.table.insert(n, v);
        v
    }

    /// Outcome of one unicast: `attempts` transmissions, acknowledged or not.
    pub fn record(&mut self, n: NodeId, attempts: u32, acked: bool) -> f64 {
        let sample = if acked { attempts.max(1) as f64 } else { NO_ACK_PENALTY };
        self.update(n, sample)
    }

    /// Mean over neighbors with at least one recorded unicast.
    pub fn mean(&self) -> Option<f64> {
        (!self.table.is_empty()).then(|| self.table.values().sum::<f64>() / self.table.len() as f64)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ewma_updates() {
        let mut e = EtxEstimator::new(0.9);
        assert_eq!(e.get(3), 1.0);
        assert!((e.record(3, 2, true) - 1.1).abs() < 1e-12);
        assert!((e.record(3, 3, false) - (0.9 * 1.1 + 1.0)).abs() < 1e-12);
        assert_eq!(e.record(4, 1, true), 1.0);
        assert_eq!(e.len(), 2);
    }
}
