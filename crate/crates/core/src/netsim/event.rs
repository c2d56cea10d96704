//! Event queue with a total order: timestamp, then event class (departures
//! before arrivals before timers before application events), then insertion
//! sequence. Equal-time departures always run before arrivals, which is what
//! makes the tail-drop decision at a full buffer well defined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::units::Nanos;

pub const CLASS_DEPARTURE: u8 = 0;
pub const CLASS_ARRIVAL: u8 = 1;
pub const CLASS_TIMER: u8 = 2;
pub const CLASS_APP: u8 = 3;

/// Where a delivered packet goes next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Entry of the multiplexing node (the shared tail-drop buffer).
    Mux,
    /// Per-receiver queue at the fan-out switch.
    EgressQueue,
    /// The receiving host.
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub src: u32,
    /// Per-source connection serial; stale packets are discarded on arrival.
    pub conn: u64,
    pub seq: u64,
    pub flags: u8,
}

impl Packet {
    pub const RETRANSMISSION: u8 = 1;
    pub const SLOW_START: u8 = 2;
    pub const FR_RTX: u8 = 4;
    pub const TO_RTX: u8 = 8;
    pub const FIRST_OF_CONN: u8 = 16;

    pub fn has(&self, flag: u8) -> bool {
        self.flags & flag != 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Departure { link: usize },
    Arrival { stage: Stage, pkt: Packet },
    AckArrival { src: u32, conn: u64, ack: u64 },
    Timer { src: u32, conn: u64, arm: u64 },
    Wake { src: u32 },
}

impl EventKind {
    fn class(&self) -> u8 {
        match self {
            EventKind::Departure { .. } => CLASS_DEPARTURE,
            EventKind::Arrival { .. } | EventKind::AckArrival { .. } => CLASS_ARRIVAL,
            EventKind::Timer { .. } => CLASS_TIMER,
            EventKind::Wake { .. } => CLASS_APP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Nanos,
    class: u8,
    seq: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest first.
        (other.time, other.class, other.seq).cmp(&(self.time, self.class, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Deterministic event queue.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue::default()
    }

    pub fn push(&mut self, time: Nanos, kind: EventKind) {
        let class = kind.class();
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, class, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn departures_precede_arrivals_at_equal_times() {
        let mut q = EventQueue::new();
        let pkt = Packet { src: 0, conn: 1, seq: 1, flags: 0 };
        q.push(100, EventKind::Arrival { stage: Stage::Mux, pkt });
        q.push(100, EventKind::Departure { link: 3 });
        q.push(99, EventKind::Wake { src: 1 });
        assert!(matches!(q.pop().unwrap().kind, EventKind::Wake { .. }));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Departure { .. }));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Arrival { .. }));
    }

    #[test]
    fn insertion_order_breaks_remaining_ties() {
        let mut q = EventQueue::new();
        q.push(5, EventKind::Departure { link: 1 });
        q.push(5, EventKind::Departure { link: 2 });
        match (q.pop().unwrap().kind, q.pop().unwrap().kind) {
            (EventKind::Departure { link: a }, EventKind::Departure { link: b }) => {
                assert_eq!((a, b), (1, 2));
            }
            _ => unreachable!(),
        }
    }
}
