//! Path algebra for the three-link topology: per-source ingress links of
//! capacity C1 feed a shared buffer in front of the multiplexing link C2,
//! which fans out to per-receiver egress links C3.

use serde::{Deserialize, Serialize};

use crate::units::{ns_to_secs, tx_time_ns, Nanos};

/// Raw link and packet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathInputs {
    /// Ingress capacity, bits/s.
    pub c1: u64,
    /// Multiplexing-link capacity, bits/s. The shared buffer sits here.
    pub c2: u64,
    /// Per-receiver egress capacity, bits/s.
    pub c3: u64,
    /// Round-trip propagation delay, ns.
    pub d_ns: Nanos,
    /// Data packet size, bytes.
    pub pkt_bytes: u32,
    /// Ack size, bytes. Acks cross all three links on the way back.
    pub ack_bytes: u32,
}

/// Derived path quantities. Times are exact integer nanoseconds so the
/// analytical values land on the same grid as the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathParams {
    pub inputs: PathInputs,
    /// Data-packet transmission time per link, ns.
    pub delta_ns: [Nanos; 3],
    /// Ack transmission time per link, ns.
    pub ack_tx_ns: [Nanos; 3],
    /// No-load round trip: D plus packet and ack transmission on every link.
    pub rtt0_ns: Nanos,
    /// Slowest-link packet time, max over the three links.
    pub delta_star_ns: Nanos,
    /// Multiplexing-link packet time (the link whose queue the model tracks).
    pub mux_delta_ns: Nanos,
}

impl PathParams {
    pub fn new(inputs: PathInputs) -> Self {
        let delta_ns = [
            tx_time_ns(inputs.pkt_bytes, inputs.c1),
            tx_time_ns(inputs.pkt_bytes, inputs.c2),
            tx_time_ns(inputs.pkt_bytes, inputs.c3),
        ];
        let ack_tx_ns = [
            tx_time_ns(inputs.ack_bytes, inputs.c1),
            tx_time_ns(inputs.ack_bytes, inputs.c2),
            tx_time_ns(inputs.ack_bytes, inputs.c3),
        ];
        let rtt0_ns = inputs.d_ns
            + delta_ns.iter().sum::<u64>()
            + ack_tx_ns.iter().sum::<u64>();
        let delta_star_ns = *delta_ns.iter().max().unwrap();
        PathParams {
            inputs,
            delta_ns,
            ack_tx_ns,
            rtt0_ns,
            delta_star_ns,
            mux_delta_ns: delta_ns[1],
        }
    }

    /// Total per-packet transmission overhead, both directions. Useful to
    /// derive D from a target no-load round trip.
    pub fn tx_overhead_ns(inputs: &PathInputs) -> Nanos {
        let p = PathParams::new(PathInputs { d_ns: 0, ..*inputs });
        p.rtt0_ns
    }

    pub fn rtt0(&self) -> f64 {
        ns_to_secs(self.rtt0_ns)
    }

    pub fn delta_star(&self) -> f64 {
        ns_to_secs(self.delta_star_ns)
    }

    pub fn mux_delta(&self) -> f64 {
        ns_to_secs(self.mux_delta_ns)
    }

    /// `beta_i = RTT0 / delta_i` per link.
    pub fn betas(&self) -> [f64; 3] {
        let r = self.rtt0_ns as f64;
        [
            r / self.delta_ns[0] as f64,
            r / self.delta_ns[1] as f64,
            r / self.delta_ns[2] as f64,
        ]
    }

    /// Packets that fit in the slowest link: `beta* = RTT0 / delta*`, the
    /// minimum of the per-link betas.
    pub fn beta_star(&self) -> f64 {
        self.rtt0_ns as f64 / self.delta_star_ns as f64
    }
}

/// Long-term saturation state of the slowest link under receiver window `w_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// `r = floor(beta*) / W_R`; below 1 the path is saturated.
    pub r: f64,
    pub saturated: bool,
    /// Standing queue `W_R - floor(beta*) + 1` when saturated (the +1 is the
    /// packet in transmission).
    pub q_sat: Option<u64>,
    /// Packets waiting, excluding the one in transmission.
    pub q_wait: Option<u64>,
}

pub fn saturation_check(path: &PathParams, w_r: u64) -> Saturation {
    assert!(w_r >= 1);
    let fb = path.beta_star().floor() as u64;
    let r = fb as f64 / w_r as f64;
    if r < 1.0 {
        Saturation {
            r,
            saturated: true,
            q_sat: Some(w_r - fb + 1),
            q_wait: Some(w_r - fb),
        }
    } else {
        Saturation { r, saturated: false, q_sat: None, q_wait: None }
    }
}
