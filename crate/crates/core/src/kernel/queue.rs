use std::collections::BTreeMap;

use thiserror::Error;

use super::time::SimTime;

/// Identifies a scheduled event for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventHandle {
    time: SimTime,
    seq: u64,
}

impl EventHandle {
    pub fn time(&self) -> SimTime {
        self.time
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub fire_time: SimTime,
    pub seq: u64,
    pub payload: P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("event scheduled at tick {at} is earlier than the current tick {now}")]
pub struct ScheduleError {
    pub now: SimTime,
    pub at: SimTime,
}

/// Pending events ordered by `(fire_time, seq)`.
#[derive(Debug)]
pub struct EventQueue<P> {
    now: SimTime,
    next_seq: u64,
    pending: BTreeMap<(SimTime, u64), P>,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            pending: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn schedule(&mut self, at: SimTime, payload: P) -> Result<EventHandle, ScheduleError> {
        if at < self.now {
            return Err(ScheduleError { now: self.now, at });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert((at, seq), payload);
        Ok(EventHandle { time: at, seq })
    }

    /// Schedules `delay` ticks after the current time; cannot fail.
    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload).expect("relative schedule is never in the past")
    }

    /// Returns true if the event was still pending.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&(handle.time, handle.seq)).is_some()
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.pending.contains_key(&(handle.time, handle.seq))
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.pending.keys().next().map(|(t, _)| *t)
    }

    /// Removes the next event if it fires at or before `limit`, advancing the clock to it.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Event<P>> {
        let (&(t, _), _) = self.pending.first_key_value()?;
        if t > limit {
            return None;
        }
        let ((fire_time, seq), payload) = self.pending.pop_first()?;
        self.now = fire_time;
        Some(Event {
            fire_time,
            seq,
            payload,
        })
    }

    /// Moves the clock forward without dispatching anything.
    pub(crate) fn advance_to(&mut self, t: SimTime) {
        debug_assert!(t >= self.now);
        self.now = t;
    }
}
