//! Simulated clock and timer queue.
//!
//! All time in miniric is simulated milliseconds. Components never sleep;
//! they schedule an event and the owner of the [`Scheduler`] fires it when the
//! clock is advanced past its deadline. Two timers due at the same instant
//! fire in the order they were scheduled, which keeps every run of the
//! simulator bit-for-bit reproducible.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

/// Handle for a scheduled timer, usable to cancel it before it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimerId(u64);

/// Deterministic timer queue over an arbitrary event payload type.
///
/// Invariants:
/// * `now_ms` never decreases.
/// * timers fire in `(deadline, scheduling order)` order.
#[derive(Debug)]
pub struct Scheduler<E> {
    now_ms: u64,
    next_seq: u64,
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    events: std::collections::HashMap<u64, E>,
    cancelled: HashSet<u64>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now_ms: 0,
            next_seq: 0,
            heap: BinaryHeap::new(),
            events: std::collections::HashMap::new(),
            cancelled: HashSet::new(),
        }
    }

    /// Current simulated time in milliseconds.
    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Schedule `event` to fire at the absolute instant `deadline_ms`.
    ///
    /// A deadline in the past fires on the next drain at the current instant.
    pub fn schedule_at(&mut self, deadline_ms: u64, event: E) -> TimerId {
        let seq = self.next_seq;
        self.next_seq += 1;
        let deadline = deadline_ms.max(self.now_ms);
        self.heap.push(Reverse((deadline, seq)));
        self.events.insert(seq, event);
        TimerId(seq)
    }

    /// Schedule `event` to fire `delay_ms` from now.
    pub fn schedule_in(&mut self, delay_ms: u64, event: E) -> TimerId {
        self.schedule_at(self.now_ms.saturating_add(delay_ms), event)
    }

    /// Cancel a pending timer. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, id: TimerId) -> bool {
        if self.events.remove(&id.0).is_some() {
            self.cancelled.insert(id.0);
            true
        } else {
            false
        }
    }

    /// Deadline of the earliest pending timer, if any.
    pub fn next_deadline(&mut self) -> Option<u64> {
        self.skip_cancelled();
        self.heap.peek().map(|Reverse((t, _))| *t)
    }

    /// Pop the earliest timer with deadline `<= limit_ms`, advancing the
    /// clock to its deadline. Returns `None` (and leaves the clock untouched)
    /// when nothing is due.
    pub fn pop_due(&mut self, limit_ms: u64) -> Option<(u64, E)> {
        self.skip_cancelled();
        let &Reverse((deadline, seq)) = self.heap.peek()?;
        if deadline > limit_ms {
            return None;
        }
        self.heap.pop();
        let event = self
            .events
            .remove(&seq)
            .expect("scheduled event present for non-cancelled seq");
        debug_assert!(deadline >= self.now_ms);
        self.now_ms = deadline;
        Some((deadline, event))
    }

    /// Move the clock forward to `target_ms` without firing anything.
    /// Panics if that would move time backwards.
    pub fn advance_to(&mut self, target_ms: u64) {
        assert!(
            target_ms >= self.now_ms,
            "clock may not move backwards ({} -> {})",
            self.now_ms,
            target_ms
        );
        self.now_ms = target_ms;
    }

    /// Number of pending (non-cancelled) timers.
    pub fn pending(&self) -> usize {
        self.events.len()
    }

    fn skip_cancelled(&mut self) {
        while let Some(&Reverse((_, seq))) = self.heap.peek() {
            if self.cancelled.remove(&seq) {
                self.heap.pop();
            } else if !self.events.contains_key(&seq) {
                // Defensive: tombstone without a cancelled marker.
                self.heap.pop();
            } else {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fires_in_deadline_then_fifo_order() {
        let mut s = Scheduler::new();
        s.schedule_at(50, "b");
        s.schedule_at(10, "a");
        s.schedule_at(50, "c"); // same deadline as "b", scheduled later
        let mut fired = Vec::new();
        while let Some((t, e)) = s.pop_due(100) {
            fired.push((t, e));
        }
        assert_eq!(fired, vec![(10, "a"), (50, "b"), (50, "c")]);
        assert_eq!(s.now_ms(), 50);
    }

    #[test]
    fn pop_due_respects_limit() {
        let mut s = Scheduler::new();
        s.schedule_at(10, 1u32);
        s.schedule_at(20, 2u32);
        assert_eq!(s.pop_due(15), Some((10, 1)));
        assert_eq!(s.pop_due(15), None);
        assert_eq!(s.now_ms(), 10);
        s.advance_to(15);
        assert_eq!(s.next_deadline(), Some(20));
    }

    #[test]
    fn cancel_prevents_firing() {
        let mut s = Scheduler::new();
        let a = s.schedule_at(10, "a");
        s.schedule_at(20, "b");
        assert!(s.cancel(a));
        assert!(!s.cancel(a), "double cancel reports false");
        assert_eq!(s.pop_due(100), Some((20, "b")));
        assert_eq!(s.pending(), 0);
    }

    #[test]
    fn past_deadline_clamps_to_now() {
        let mut s = Scheduler::new();
        s.advance_to(100);
        s.schedule_at(5, "late");
        assert_eq!(s.pop_due(100), Some((100, "late")));
    }

    #[test]
    #[should_panic(expected = "clock may not move backwards")]
    fn clock_is_monotone() {
        let mut s: Scheduler<()> = Scheduler::new();
        s.advance_to(10);
        s.advance_to(5);
    }
}
