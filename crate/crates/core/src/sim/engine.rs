//! Deterministic discrete-event queue.
//!
//! Events are ordered by `(time, sequence)`; the sequence number is assigned at
//! schedule time, so equal-time events replay in insertion order regardless of
//! any RNG state.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::SimTime;
use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventHandle(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct Event<E> {
    pub time: SimTime,
    pub sequence: u64,
    pub kind: E,
}

struct Queued<E> {
    time: SimTime,
    sequence: u64,
    kind: E,
}

impl<E> PartialEq for Queued<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.sequence) == (other.time, other.sequence)
    }
}

impl<E> Eq for Queued<E> {}

impl<E> PartialOrd for Queued<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Queued<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.sequence).cmp(&(other.time, other.sequence))
    }
}

pub struct Engine<E> {
    now: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Reverse<Queued<E>>>,
    cancelled: BTreeSet<u64>,
    processed: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_sequence: 0,
            queue: BinaryHeap::new(),
            cancelled: BTreeSet::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Total events handed to handlers since construction.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, time: SimTime, kind: E) -> Result<EventHandle, SimError> {
        if time < self.now {
            return Err(SimError::ScheduleInPast {
                requested: time,
                now: self.now,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Reverse(Queued { time, sequence, kind }));
        Ok(EventHandle(sequence))
    }

    /// Schedules `delay_us` after the current clock; never fails.
    pub fn schedule_in(&mut self, delay_us: u64, kind: E) -> EventHandle {
        let time = self.now + delay_us;
        self.schedule(time, kind)
            .expect("relative schedule cannot be in the past")
    }

    /// Returns false if the event already ran or was cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_sequence {
            return false;
        }
        let live = self.queue.iter().any(|Reverse(q)| q.sequence == handle.0);
        live && self.cancelled.insert(handle.0)
    }

    /// Pops the next live event with `time <= t_end`, advancing the clock to it.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<E>> {
        loop {
            let head = self.queue.peek()?;
            if head.0.time > t_end {
                return None;
            }
            let Reverse(q) = self.queue.pop().expect("peeked");
            if self.cancelled.remove(&q.sequence) {
                continue;
            }
            self.now = q.time;
            self.processed += 1;
            return Some(Event {
                time: q.time,
                sequence: q.sequence,
                kind: q.kind,
            });
        }
    }

    /// Processes every event with `time <= t_end` and leaves the clock at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, SimError>
    where
        F: FnMut(&mut Self, Event<E>),
    {
        if t_end < self.now {
            return Err(SimError::RunIntoPast {
                requested: t_end,
                now: self.now,
            });
        }
        let mut count = 0;
        while let Some(event) = self.pop_until(t_end) {
            handler(self, event);
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_at_now_is_accepted() {
        let mut engine = Engine::new();
        assert_eq!(engine.schedule(SimTime(0), ()).unwrap(), EventHandle(0));
    }

    #[test]
    fn earlier_event_runs_first() {
        let mut engine = Engine::new();
        engine.schedule(SimTime(5), "five").unwrap();
        engine.schedule(SimTime(3), "three").unwrap();
        let mut seen = vec![];
        engine.run_until(SimTime(10), |_, ev| seen.push(ev.kind)).unwrap();
        assert_eq!(seen, ["three", "five"]);
    }

    #[test]
    fn equal_times_run_in_insertion_order() {
        let mut engine = Engine::new();
        for i in 0..5 {
            engine.schedule(SimTime(7), i).unwrap();
        }
        let mut seen = vec![];
        engine.run_until(SimTime(7), |_, ev| seen.push(ev.kind)).unwrap();
        assert_eq!(seen, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut engine: Engine<()> = Engine::new();
        assert_eq!(engine.run_until(SimTime(100), |_, _| {}).unwrap(), 0);
        assert_eq!(engine.now(), SimTime(100));
    }

    #[test]
    fn run_until_filters_by_time() {
        let mut engine = Engine::new();
        for t in [1, 2, 3, 50] {
            engine.schedule(SimTime(t), t).unwrap();
        }
        assert_eq!(engine.run_until(SimTime(10), |_, _| {}).unwrap(), 3);
        assert_eq!(engine.pending(), 1);
    }

    #[test]
    fn rejects_past_events() {
        let mut engine: Engine<()> = Engine::new();
        engine.run_until(SimTime(10), |_, _| {}).unwrap();
        assert!(matches!(
            engine.schedule(SimTime(9), ()),
            Err(SimError::ScheduleInPast { .. })
        ));
        assert!(engine.run_until(SimTime(5), |_, _| {}).is_err());
    }

    #[test]
    fn cancelled_events_are_skipped() {
        let mut engine = Engine::new();
        let a = engine.schedule(SimTime(1), 'a').unwrap();
        engine.schedule(SimTime(2), 'b').unwrap();
        assert!(engine.cancel(a));
        assert!(!engine.cancel(a));
        let mut seen = vec![];
        engine.run_until(SimTime(5), |_, ev| seen.push(ev.kind)).unwrap();
        assert_eq!(seen, ['b']);
    }

    #[test]
    fn handlers_can_schedule_follow_ups() {
        let mut engine = Engine::new();
        engine.schedule(SimTime(0), 0u32).unwrap();
        let mut log = vec![];
        engine
            .run_until(SimTime(100), |eng, ev| {
                log.push((ev.time.as_us(), ev.kind));
                if ev.kind < 3 {
                    eng.schedule_in(10, ev.kind + 1);
                }
            })
            .unwrap();
        assert_eq!(log, [(0, 0), (10, 1), (20, 2), (30, 3)]);
    }

    #[test]
    fn clock_never_decreases() {
        let mut engine = Engine::new();
        for t in [9, 3, 3, 7, 1, 12] {
            engine.schedule(SimTime(t), ()).unwrap();
        }
        let mut last = SimTime::ZERO;
        engine
            .run_until(SimTime(20), |eng, ev| {
                assert!(ev.time >= last);
                assert_eq!(eng.now(), ev.time);
                last = ev.time;
            })
            .unwrap();
    }
}
