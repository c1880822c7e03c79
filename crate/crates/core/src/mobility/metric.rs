use thiserror::Error;

use super::{MobilityTrace, Velocity};
use crate::kernel::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("mobility metric needs at least two traces (got {0})")]
    TooFewNodes(usize),
    #[error("step and horizon must be positive")]
    ZeroStep,
}

/// Norm of the velocity difference of two traces at `t`.
pub fn relative_speed(a: &MobilityTrace, b: &MobilityTrace, t: SimTime) -> f64 {
    a.velocity_at(t).minus(b.velocity_at(t)).norm()
}

/// Pair- and time-averaged relative speed over `[0, horizon]`, integrated by
/// the midpoint rule with step `dt` (the last cell may be shorter).
pub fn mobility_metric(
    traces: &[MobilityTrace],
    horizon: SimTime,
    dt: SimTime,
) -> Result<f64, MetricError> {
    let n = traces.len();
    if n < 2 {
        return Err(MetricError::TooFewNodes(n));
    }
    if dt == SimTime::ZERO || horizon == SimTime::ZERO {
        return Err(MetricError::ZeroStep);
    }
    let end = horizon.ticks();
    let mut vel = vec![Velocity::ZERO; n];
    let mut integral = 0.0;
    let mut a = 0u64;
    while a < end {
        let b = (a + dt.ticks()).min(end);
        let mid = SimTime::from_ticks(a + (b - a) / 2);
        for (v, tr) in vel.iter_mut().zip(traces) {
            *v = tr.velocity_at(mid);
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += vel[i].minus(vel[j]).norm();
            }
        }
        integral += sum * (b - a) as f64;
        a = b;
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(integral / end as f64 / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{Pos, TraceBuilder};

    fn line(node: u32, v: (f64, f64), secs: f64) -> MobilityTrace {
        let mut b = TraceBuilder::new(node, Pos::new(0.0, 0.0), SimTime::from_secs(secs));
        b.push(secs, Pos::new(v.0 * secs, v.1 * secs), false);
        b.finish()
    }

    #[test]
    fn too_few_traces() {
        let t = line(0, (1.0, 0.0), 10.0);
        assert_eq!(
            mobility_metric(&[t], SimTime::from_secs(10.0), SimTime::from_secs(1.0)),
            Err(MetricError::TooFewNodes(1))
        );
    }

    #[test]
    fn relative_speed_is_symmetric() {
        let a = line(0, (3.0, 4.0), 10.0);
        let b = line(1, (0.0, 0.0), 10.0);
        let t = SimTime::from_secs(2.0);
        assert!((relative_speed(&a, &b, t) - 5.0).abs() < 1e-12);
        assert_eq!(relative_speed(&a, &b, t), relative_speed(&b, &a, t));
    }
}
