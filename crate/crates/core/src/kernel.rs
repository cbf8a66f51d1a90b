//! Discrete-event engine: clock plus time-ordered event queue.
//!
//! Events fire in non-decreasing time; ties break by insertion order, so a
//! run is a pure function of (config, seed). Cancellation is lazy: a
//! cancelled entry stays in the heap and is discarded when popped.

use crate::time::SimTime;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

/// Handle returned by [`Kernel::schedule`]; usable for cancellation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EventHandle(u64);

#[derive(Debug)]
struct Entry<K> {
    time: SimTime,
    seq: u64,
    kind: K,
}

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl<K> Eq for Entry<K> {}
impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<K> Ord for Entry<K> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// A fired event, handed to the run loop.
#[derive(Debug)]
pub struct Fired<K> {
    pub time: SimTime,
    pub seq: u64,
    pub kind: K,
}

#[derive(Debug)]
pub struct Kernel<K> {
    clock: SimTime,
    heap: BinaryHeap<Reverse<Entry<K>>>,
    next_seq: u64,
    /// Scheduled, not yet fired, not cancelled.
    pending: HashSet<u64>,
    fired_count: u64,
}

impl<K> Kernel<K> {
    pub fn new() -> Self {
        Kernel {
            clock: SimTime::ZERO,
            heap: BinaryHeap::new(),
            next_seq: 0,
            pending: HashSet::new(),
            fired_count: 0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn fired_count(&self) -> u64 {
        self.fired_count
    }

    /// Number of pending (schedulable) events.
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Schedule `kind` to fire at `at`. Scheduling into the past is a
    /// programming error and aborts the run.
    pub fn schedule(&mut self, at: SimTime, kind: K) -> EventHandle {
        assert!(
            at >= self.clock,
            "event scheduled into the past: at={} clock={}",
            at,
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert(seq);
        self.heap.push(Reverse(Entry { time: at, seq, kind }));
        EventHandle(seq)
    }

    /// Remove a pending event. Returns false if it already fired or was
    /// already cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle.0)
    }

    /// Pop the next event with fire time <= `t_end`, advancing the clock to
    /// its fire time. Returns `None` (clock advanced to `t_end`) when no such
    /// event remains.
    pub fn next_before(&mut self, t_end: SimTime) -> Option<Fired<K>> {
        while let Some(Reverse(head)) = self.heap.peek() {
            if head.time > t_end {
                break;
            }
            let Reverse(entry) = self.heap.pop().unwrap();
            if !self.pending.remove(&entry.seq) {
                continue; // cancelled
            }
            debug_assert!(entry.time >= self.clock);
            self.clock = entry.time;
            self.fired_count += 1;
            return Some(Fired { time: entry.time, seq: entry.seq, kind: entry.kind });
        }
        self.clock = t_end;
        None
    }
}

impl<K> Default for Kernel<K> {
    fn default() -> Self {
        Self::new()
    }
}

/// Formats one trace line: `time_us<TAB>seq<TAB>kind<TAB>node<TAB>detail`.
pub fn trace_line(time: SimTime, seq: u64, kind: &str, node: usize, detail: &str) -> String {
    format!("{}\t{}\t{}\t{}\t{}", time.micros(), seq, kind, node, detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_basic_contract() {
        let mut k: Kernel<&str> = Kernel::new();
        let h1 = k.schedule(SimTime::from_secs(2), "timer");
        assert_eq!(k.len(), 1);
        assert!(k.cancel(h1));
    }

    #[test]
    fn same_time_events_fire_in_insertion_order() {
        let mut k: Kernel<u32> = Kernel::new();
        k.schedule(SimTime::from_secs(5), 1);
        k.schedule(SimTime::from_secs(5), 2);
        let a = k.next_before(SimTime::from_secs(10)).unwrap();
        let b = k.next_before(SimTime::from_secs(10)).unwrap();
        assert_eq!((a.kind, b.kind), (1, 2));
        assert!(a.seq < b.seq);
    }

    #[test]
    #[should_panic(expected = "scheduled into the past")]
    fn scheduling_into_past_is_fatal() {
        let mut k: Kernel<u32> = Kernel::new();
        k.schedule(SimTime::from_secs(5), 0);
        while k.next_before(SimTime::from_secs(5)).is_some() {}
        assert_eq!(k.clock(), SimTime::from_secs(5));
        k.schedule(SimTime::from_secs(1), 1);
    }

    #[test]
    fn cancel_semantics() {
        let mut k: Kernel<u32> = Kernel::new();
        let h = k.schedule(SimTime::from_secs(1), 7);
        assert!(k.cancel(h));
        assert!(!k.cancel(h), "second cancel must return false");
        assert!(k.next_before(SimTime::from_secs(2)).is_none());

        let h2 = k.schedule(SimTime::from_secs(3), 8);
        assert!(k.next_before(SimTime::from_secs(3)).is_some());
        assert!(!k.cancel(h2), "cancel after firing must return false");
    }

    #[test]
    fn run_until_processes_due_events_and_sets_clock() {
        let mut k: Kernel<u32> = Kernel::new();
        for s in [1, 2, 3] {
            k.schedule(SimTime::from_secs(s), s as u32);
        }
        let mut fired = vec![];
        let t_end = SimTime::from_secs_f64(2.5);
        while let Some(ev) = k.next_before(t_end) {
            fired.push(ev.kind);
        }
        assert_eq!(fired, vec![1, 2]);
        assert_eq!(k.clock(), t_end);
        assert_eq!(k.len(), 1);
    }

    #[test]
    fn empty_queue_run_advances_clock() {
        let mut k: Kernel<u32> = Kernel::new();
        assert!(k.next_before(SimTime::from_secs(50)).is_none());
        assert_eq!(k.clock(), SimTime::from_secs(50));
        assert_eq!(k.fired_count(), 0);
    }

    #[test]
    fn trace_line_format() {
        let line = trace_line(SimTime::from_micros(1500), 3, "deliver", 2, "hello from 1");
        assert_eq!(line, "1500\t3\tdeliver\t2\thello from 1");
    }
}
