//! Slow-start flight schedule for a single transfer and the (m, n)
//! decomposition of its no-contention duration: ON0 = m*RTT0 + n*delta*.

use serde::{Deserialize, Serialize};

use crate::model::ModelError;
use crate::units::Nanos;

/// Sequence of flight sizes for one file transfer. `m` is the number of
/// flights, `n` the last flight size minus one; together they give
/// `ON0 = m*RTT0 + n*delta*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightSchedule {
    pub flights: Vec<u64>,
    pub m: u32,
    pub n: u64,
    /// True when the slowest link saturated and the remaining packets merged
    /// into one closing flight.
    pub saturated: bool,
    /// Last packet sent in slow start when the receiver window is first
    /// reached (2*W_R - 2); None when the transfer ends before that.
    pub l_ss: Option<u64>,
}

/// Build the flight schedule: the window starts at `initial_window`, doubles
/// each round, and is capped at `w_r`. When the next window no longer fits
/// the slowest link (window > floor(beta*)) the link stays busy to the end of
/// the file, so all remaining packets form a single closing flight.
pub fn compute_flights_with_window(
    file_size: u64,
    w_r: u64,
    beta_star: f64,
    initial_window: u64,
) -> Result<FlightSchedule, ModelError> {
    if file_size < 3 {
        return Err(ModelError::UnsupportedConfiguration("file size below 3 packets"));
    }
    if w_r < 4 {
        return Err(ModelError::UnsupportedConfiguration("receiver window below 4 packets"));
    }
    if !(beta_star > 2.0) {
        return Err(ModelError::UnsupportedConfiguration("path holds fewer than 2 packets"));
    }
    let fit = beta_star.floor() as u64;
    let mut flights = Vec::new();
    let mut window = initial_window;
    let mut sent = 0u64;
    let mut saturated = false;
    while sent < file_size {
        let remaining = file_size - sent;
        if window > fit {
            flights.push(remaining);
            saturated = true;
            break;
        }
        flights.push(window.min(remaining));
        sent += window.min(remaining);
        window = (window * 2).min(w_r);
    }
    let m = flights.len() as u32;
    let n = flights.last().unwrap() - 1;
    let l_ss = if file_size > 2 * w_r - 2 { Some(2 * w_r - 2) } else { None };
    Ok(FlightSchedule { flights, m, n, saturated, l_ss })
}

pub fn compute_flights(file_size: u64, w_r: u64, beta_star: f64) -> Result<FlightSchedule, ModelError> {
    compute_flights_with_window(file_size, w_r, beta_star, 2)
}

/// `ON0 = m*RTT0 + n*delta*` on the nanosecond grid.
pub fn compute_on0(sched: &FlightSchedule, rtt0_ns: Nanos, delta_star_ns: Nanos) -> Nanos {
    sched.m as u64 * rtt0_ns + sched.n * delta_star_ns
}

/// Re-express ON0 as m*RTT0 + n*delta* with n small enough to fit the
/// slowest link: m = floor(ON0/RTT0) and n = floor(remainder/delta*). The
/// result always satisfies n <= floor(beta*) and reconstructs ON0 to within
/// one packet time.
pub fn renormalize(on0_ns: Nanos, rtt0_ns: Nanos, delta_star_ns: Nanos) -> (u32, u64) {
    let m = on0_ns / rtt0_ns;
    let rem = on0_ns - m * rtt0_ns;
    let n = rem / delta_star_ns;
    (m as u32, n)
}

/// Peak sending rate of a lone transfer, bits/s: F*P*8 over ON0.
pub fn peak_rate(file_size: u64, pkt_bytes: u32, on0_ns: Nanos) -> f64 {
    assert!(on0_ns > 0);
    let bits = file_size as f64 * pkt_bytes as f64 * 8.0;
    bits / crate::units::ns_to_secs(on0_ns)
}
