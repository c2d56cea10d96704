//! Retransmission-timeout estimator per RFC 6298 with zero clock
//! granularity: SRTT/RTTVAR smoothing, a configurable floor (1 s by
//! default), exponential backoff on retransmission, 64 s cap.

use crate::units::{Nanos, NS_PER_SEC};

pub const DEFAULT_MIN_RTO_NS: Nanos = NS_PER_SEC;
pub const MAX_RTO_NS: Nanos = 64 * NS_PER_SEC;

#[derive(Debug, Clone)]
pub struct RtoEstimator {
    srtt: f64,
    rttvar: f64,
    have_sample: bool,
    /// max(min_rto, srtt + 4*rttvar), before backoff.
    base_ns: Nanos,
    backoff: u32,
    min_rto_ns: Nanos,
}

impl RtoEstimator {
    pub fn new(min_rto_ns: Nanos) -> Self {
        RtoEstimator {
            srtt: 0.0,
            rttvar: 0.0,
            have_sample: false,
            base_ns: NS_PER_SEC, // initial RTO is 1 s
            backoff: 0,
            min_rto_ns,
        }
    }

    /// Feed one round-trip measurement. Resets any backoff in force.
    pub fn on_sample(&mut self, r_ns: Nanos) {
        let r = r_ns as f64;
        if !self.have_sample {
            self.srtt = r;
            self.rttvar = r / 2.0;
            self.have_sample = true;
        } else {
            self.rttvar = 0.75 * self.rttvar + 0.25 * (self.srtt - r).abs();
            self.srtt = 0.875 * self.srtt + 0.125 * r;
        }
        let rto = self.srtt + 4.0 * self.rttvar;
        self.base_ns = (rto as Nanos).max(self.min_rto_ns);
        self.backoff = 0;
    }

    /// Double the timeout for a retransmission, capped at 64 s.
    pub fn back_off(&mut self) {
        if self.backoff < 32 {
            self.backoff += 1;
        }
    }

    /// Current timeout with backoff and cap applied.
    pub fn current(&self) -> Nanos {
        let shifted = (self.base_ns as u128) << self.backoff;
        shifted.min(MAX_RTO_NS as u128) as Nanos
    }

    /// Formula value before the floor, for inspection in tests.
    pub fn unclamped(&self) -> f64 {
        if self.have_sample {
            self.srtt + 4.0 * self.rttvar
        } else {
            NS_PER_SEC as f64
        }
    }
}
