use std::fmt::Write as _;

use super::Energy;
use crate::kernel::NodeId;
use crate::rpl::NodeRole;

pub const NODES_CSV_HEADER: &str =
    "rep,node,role,cpu_mJ,lpm_mJ,tx_mJ,listen_mJ,total_mJ,avg_mW,sent,delivered,pdr,avg_hops,dio,dao,dis,nd_msgs,mean_etx";

const METRIC_NAMES: [&str; 15] = [
    "cpu_mJ", "lpm_mJ", "tx_mJ", "listen_mJ", "total_mJ", "avg_mW", "sent", "delivered", "pdr", "avg_hops", "dio",
    "dao", "dis", "nd_msgs", "mean_etx",
];

/// One row of the per-node report.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub rep: u32,
    pub node: NodeId,
    pub role: NodeRole,
    pub energy: Energy,
    pub avg_mw: f64,
    pub sent: u64,
    pub delivered: u64,
    pub pdr: f64,
    /// Mean over delivered packets; absent when none arrived.
    pub avg_hops: Option<f64>,
    pub dio: u64,
    pub dao: u64,
    pub dis: u64,
    pub nd_msgs: u64,
    pub mean_etx: Option<f64>,
}

impl NodeMetrics {
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let e = &self.energy;
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.rep,
            self.node,
            self.role.as_str(),
            format_num(e.cpu),
            format_num(e.lpm),
            format_num(e.tx),
            format_num(e.listen),
            format_num(e.total),
            format_num(self.avg_mw),
            self.sent,
            self.delivered,
            format_num(self.pdr),
            format_opt(self.avg_hops),
            self.dio,
            self.dao,
            self.dis,
            self.nd_msgs,
            format_opt(self.mean_etx),
        )
        .unwrap();
        s
    }

    pub fn metric_names() -> Vec<&'static str> {
        METRIC_NAMES.to_vec()
    }

    /// Named numeric columns, in CSV order, for aggregation.
    pub fn metrics(&self) -> [(&'static str, Option<f64>); 15] {
        let e = &self.energy;
        let v = [
            Some(e.cpu),
            Some(e.lpm),
            Some(e.tx),
            Some(e.listen),
            Some(e.total),
            Some(self.avg_mw),
            Some(self.sent as f64),
            Some(self.delivered as f64),
            Some(self.pdr),
            self.avg_hops,
            Some(self.dio as f64),
            Some(self.dao as f64),
            Some(self.dis as f64),
            Some(self.nd_msgs as f64),
            self.mean_etx,
        ];
        std::array::from_fn(|i| (METRIC_NAMES[i], v[i]))
    }
}

/// Six significant digits, trailing zeros dropped.
pub fn format_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x.is_infinite() { format!("{x}") } else { "0".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific format parses");
    format!("{rounded}")
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_num).unwrap_or_default()
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Standard deviation with the n - 1 denominator; absent below two samples.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}
