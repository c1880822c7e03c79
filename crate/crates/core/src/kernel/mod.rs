//! Deterministic discrete-event kernel.
//!
//! Time is counted in ticks of a 32768 Hz clock. Events are dispatched in
//! `(fire_time, seq)` order, where `seq` is the insertion counter, so ties
//! are FIFO and a run is fully reproducible for a fixed seed.

mod queue;
pub mod rng;
mod time;

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use queue::{Event, EventHandle, EventQueue, ScheduleError};
pub use rng::{Purpose, SimRng, StreamId};
pub use time::{SimTime, TICKS_PER_SECOND};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    World,
    Node(NodeId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::World => f.write_str("world"),
            Target::Node(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    TimerExpiry,
    FrameArrival,
    WaypointUpdate,
    AppSend,
    WakeSample,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::TimerExpiry => "timer-expiry",
            EventKind::FrameArrival => "frame-arrival",
            EventKind::WaypointUpdate => "waypoint-update",
            EventKind::AppSend => "app-send",
            EventKind::WakeSample => "wake-sample",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "timer-expiry" => EventKind::TimerExpiry,
            "frame-arrival" => EventKind::FrameArrival,
            "waypoint-update" => EventKind::WaypointUpdate,
            "app-send" => EventKind::AppSend,
            "wake-sample" => EventKind::WakeSample,
            _ => return None,
        })
    }
}

/// Closed set of event payloads understood by a handler.
pub trait Payload {
    fn target(&self) -> Target;
    fn kind(&self) -> EventKind;
}

pub trait Handler<P> {
    type Error: std::error::Error + 'static;

    fn handle(&mut self, queue: &mut EventQueue<P>, event: Event<P>) -> Result<(), Self::Error>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub events_dispatched: u64,
    pub wall_clock: Duration,
}

#[derive(Debug, Error)]
pub enum KernelError<E: std::error::Error + 'static> {
    #[error("run end {t_end} is before the current tick {now}")]
    EndInPast { now: SimTime, t_end: SimTime },
    #[error("handler failed at tick {at} (seq {seq}): {source}")]
    Handler {
        at: SimTime,
        seq: u64,
        #[source]
        source: E,
    },
    #[error("writing event log: {0}")]
    Log(#[from] std::io::Error),
}

/// Dispatches every event with `fire_time <= t_end`, then leaves the clock at `t_end`.
///
/// When `log` is given, one line `ticks<TAB>seq<TAB>target<TAB>kind` is
/// written per dispatched event.
pub fn run_until<P, H>(
    queue: &mut EventQueue<P>,
    handler: &mut H,
    t_end: SimTime,
    mut log: Option<&mut dyn Write>,
) -> Result<KernelStats, KernelError<H::Error>>
where
    P: Payload,
    H: Handler<P>,
{
    if t_end < queue.now() {
        return Err(KernelError::EndInPast {
            now: queue.now(),
            t_end,
        });
    }
    let started = Instant::now();
    let mut dispatched = 0u64;
    while let Some(event) = queue.pop_until(t_end) {
        if let Some(w) = log.as_deref_mut() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                event.fire_time.ticks(),
                event.seq,
                event.payload.target(),
                event.payload.kind().as_str()
            )?;
        }
        dispatched += 1;
        let (at, seq) = (event.fire_time, event.seq);
        handler
            .handle(queue, event)
            .map_err(|source| KernelError::Handler { at, seq, source })?;
    }
    queue.advance_to(t_end);
    Ok(KernelStats {
        events_dispatched: dispatched,
        wall_clock: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, Copy)]
    struct Tick(u32);

    impl Payload for Tick {
        fn target(&self) -> Target {
            Target::Node(self.0)
        }
        fn kind(&self) -> EventKind {
            EventKind::TimerExpiry
        }
    }

    #[derive(Default)]
    struct Recorder {
        seen: Vec<(u64, u32)>,
        reschedule_into_past: bool,
    }

    impl Handler<Tick> for Recorder {
        type Error = ScheduleError;

        fn handle(&mut self, q: &mut EventQueue<Tick>, ev: Event<Tick>) -> Result<(), ScheduleError> {
            self.seen.push((ev.fire_time.ticks(), ev.payload.0));
            if self.reschedule_into_past && ev.fire_time.ticks() > 0 {
                q.schedule(SimTime::from_ticks(ev.fire_time.ticks() - 1), Tick(99))?;
            }
            Ok(())
        }
    }

    #[test]
    fn empty_queue_runs_to_end() {
        let mut q: EventQueue<Tick> = EventQueue::new();
        let mut h = Recorder::default();
        let hour = SimTime::from_secs(3600.0);
        let stats = run_until(&mut q, &mut h, hour, None).unwrap();
        assert_eq!(stats.events_dispatched, 0);
        assert_eq!(q.now(), hour);
    }

    #[test]
    fn events_after_end_stay_pending() {
        let mut q = EventQueue::new();
        for t in 1..=3 {
            q.schedule(SimTime::from_ticks(t), Tick(t as u32)).unwrap();
        }
        let mut h = Recorder::default();
        let stats = run_until(&mut q, &mut h, SimTime::from_ticks(2), None).unwrap();
        assert_eq!(stats.events_dispatched, 2);
        assert_eq!(q.now().ticks(), 2);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn log_lines_are_tab_separated() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ticks(4), Tick(2)).unwrap();
        q.schedule(SimTime::from_ticks(4), Tick(1)).unwrap();
        let mut buf = Vec::new();
        run_until(&mut q, &mut Recorder::default(), SimTime::from_ticks(10), Some(&mut buf)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "4\t0\t2\ttimer-expiry\n4\t1\t1\ttimer-expiry\n"
        );
    }

    #[test]
    fn scheduling_into_past_aborts() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ticks(5), Tick(0)).unwrap();
        let mut h = Recorder {
            reschedule_into_past: true,
            ..Default::default()
        };
        let err = run_until(&mut q, &mut h, SimTime::from_ticks(10), None).unwrap_err();
        assert!(matches!(err, KernelError::Handler { at, .. } if at.ticks() == 5));
    }

    #[test]
    fn end_before_now_is_rejected() {
        let mut q: EventQueue<Tick> = EventQueue::new();
        run_until(&mut q, &mut Recorder::default(), SimTime::from_ticks(5), None).unwrap();
        assert!(matches!(
            run_until(&mut q, &mut Recorder::default(), SimTime::from_ticks(4), None),
            Err(KernelError::EndInPast { .. })
        ));
    }
}
