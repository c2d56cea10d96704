//! Receiver side: acknowledge every data packet with the next expected
//! sequence number, buffering out-of-order arrivals.

use std::collections::BTreeSet;

/// Packet-granular receiver for one transfer of `total` packets numbered
/// from 1.
#[derive(Debug, Clone)]
pub struct Receiver {
    total: u64,
    expected: u64,
    out_of_order: BTreeSet<u64>,
}

impl Receiver {
    pub fn new(total: u64) -> Self {
        Receiver { total, expected: 1, out_of_order: BTreeSet::new() }
    }

    /// Process one data packet and return the cumulative ack to send.
    pub fn on_data(&mut self, seq: u64) -> u64 {
        if seq == self.expected {
            self.expected += 1;
            while self.out_of_order.remove(&self.expected) {
                self.expected += 1;
            }
        } else if seq > self.expected {
            self.out_of_order.insert(seq);
        }
        // Anything below `expected` is a duplicate: re-ack.
        self.expected
    }

    /// All packets received in sequence.
    pub fn complete(&self) -> bool {
        self.expected > self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_order_cumulative_acks() {
        let mut r = Receiver::new(3);
        assert_eq!(r.on_data(1), 2);
        assert_eq!(r.on_data(2), 3);
        assert_eq!(r.on_data(3), 4);
        assert!(r.complete());
    }

    #[test]
    fn gap_produces_duplicates_then_fills() {
        let mut r = Receiver::new(5);
        assert_eq!(r.on_data(1), 2);
        assert_eq!(r.on_data(3), 2);
        assert_eq!(r.on_data(4), 2);
        assert_eq!(r.on_data(5), 2);
        assert_eq!(r.on_data(2), 6);
        assert!(r.complete());
    }

    #[test]
    fn duplicate_data_reacked() {
        let mut r = Receiver::new(4);
        r.on_data(1);
        assert_eq!(r.on_data(1), 2);
        assert!(!r.complete());
    }
}
