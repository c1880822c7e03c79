use rand::Rng;

use crate::kernel::{SimRng, SimTime};

/// Trickle timer state. Times are absolute; the caller schedules the returned instants.
#[derive(Debug, Clone)]
pub struct Trickle {
    i_min: u64,
    i_max: u64,
    k: u32,
    interval: u64,
    c: u32,
    started: SimTime,
    fire_at: SimTime,
    running: bool,
    history: Vec<SimTime>,
}

/// The two instants of the current interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrickleSchedule {
    pub fire: SimTime,
    pub end: SimTime,
}

impl Trickle {
    pub fn new(i_min: SimTime, doublings: u32, k: u32) -> Self {
        let i_min = i_min.ticks().max(2);
        Trickle {
            i_min,
            i_max: i_min << doublings,
            k,
            interval: i_min,
            c: 0,
            started: SimTime::ZERO,
            fire_at: SimTime::ZERO,
            running: false,
            history: Vec::new(),
        }
    }

    pub fn interval(&self) -> SimTime {
        SimTime::from_ticks(self.interval)
    }

    pub fn i_min(&self) -> SimTime {
        SimTime::from_ticks(self.i_min)
    }

    pub fn i_max(&self) -> SimTime {
        SimTime::from_ticks(self.i_max)
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn counter(&self) -> u32 {
        self.c
    }

    /// Lengths of every interval begun so far, in order.
    pub fn history(&self) -> &[SimTime] {
        &self.history
    }

    fn begin(&mut self, now: SimTime, rng: &mut SimRng) -> TrickleSchedule {
        self.started = now;
        self.c = 0;
        let half = self.interval / 2;
        self.fire_at = now + SimTime::from_ticks(rng.random_range(half..self.interval));
        self.history.push(SimTime::from_ticks(self.interval));
        TrickleSchedule {
            fire: self.fire_at,
            end: now + SimTime::from_ticks(self.interval),
        }
    }

    pub fn start(&mut self, now: SimTime, rng: &mut SimRng) -> TrickleSchedule {
        self.running = true;
        self.interval = self.i_min;
        self.begin(now, rng)
    }

    pub fn stop(&mut self) {
        self.running = false;
    }

    /// At the fire point: transmit iff fewer than k consistent messages were heard.
    pub fn should_transmit(&self) -> bool {
        self.c < self.k
    }

    pub fn hear_consistent(&mut self) {
        self.c = self.c.saturating_add(1);
    }

    /// Interval end: doubles I up to the cap and starts the next interval.
    pub fn next_interval(&mut self, now: SimTime, rng: &mut SimRng) -> TrickleSchedule {
        self.interval = (self.interval * 2).min(self.i_max);
        self.begin(now, rng)
    }

    /// Inconsistency: restart at i_min. Does nothing while I already equals i_min.
    pub fn reset(&mut self, now: SimTime, rng: &mut SimRng) -> Option<TrickleSchedule> {
        if !self.running || self.interval == self.i_min {
            return None;
        }
        self.interval = self.i_min;
        Some(self.begin(now, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng::{stream, Purpose, StreamId};

    #[test]
    fn fire_point_in_second_half() {
        let mut r = stream(1, StreamId::new(Purpose::Trickle, 0));
        let mut t = Trickle::new(SimTime::from_ticks(1000), 3, 2);
        let s = t.start(SimTime::ZERO, &mut r);
        assert!(s.fire.ticks() >= 500 && s.fire.ticks() < 1000);
        assert_eq!(s.end.ticks(), 1000);
    }

    #[test]
    fn suppression_at_k() {
        let mut t = Trickle::new(SimTime::from_ticks(1000), 3, 2);
        t.hear_consistent();
        assert!(t.should_transmit());
        t.hear_consistent();
        assert!(!t.should_transmit());
    }
}
