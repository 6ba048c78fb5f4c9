//! Future-event list for the discrete-event models.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

/// Handle returned by [`EventCalendar::schedule`], used to cancel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventId(u64);

struct Entry<E> {
    time: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: the heap pops the earliest time, then the earliest scheduled
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

/// Events ordered by time; simultaneous events come out in the order they
/// were scheduled.
pub struct EventCalendar<E> {
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: f64,
}

impl<E> Default for EventCalendar<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventCalendar<E> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), cancelled: HashSet::new(), next_seq: 0, now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Schedules `event` after `delay` (>= 0) from now.
    pub fn schedule(&mut self, delay: f64, event: E) -> EventId {
        debug_assert!(delay >= 0.0, "negative delay {delay}");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time: self.now + delay, seq, event });
        EventId(seq)
    }

    pub fn cancel(&mut self, id: EventId) {
        self.cancelled.insert(id.0);
    }

    /// Advances the clock to the next live event.
    pub fn pop(&mut self) -> Option<(f64, E)> {
        while let Some(e) = self.heap.pop() {
            if self.cancelled.remove(&e.seq) {
                continue;
            }
            self.now = e.time;
            return Some((e.time, e.event));
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_ties_and_cancel() {
        let mut c = EventCalendar::new();
        c.schedule(2.0, "late");
        let x = c.schedule(1.0, "cancelled");
        c.schedule(1.5, "first-tie");
        c.schedule(1.5, "second-tie");
        c.cancel(x);
        let order: Vec<&str> = std::iter::from_fn(|| c.pop().map(|(_, e)| e)).collect();
        assert_eq!(order, vec!["first-tie", "second-tie", "late"]);
        assert_eq!(c.now(), 2.0);
    }

    #[test]
    fn delays_are_relative_to_now() {
        let mut c = EventCalendar::new();
        c.schedule(1.0, 1);
        c.pop();
        c.schedule(0.5, 2);
        assert_eq!(c.pop(), Some((1.5, 2)));
    }
}
