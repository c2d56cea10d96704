//! Queue statistics derived from the closed-loop ON time, the exponential
//! overflow approximation built on them, and the time-average queue of a
//! single ON-OFF connection.

use serde::{Deserialize, Serialize};

use crate::model::ModelError;

/// Multiplexing-queue summary: closed-loop RTT, average content, and the
/// exponential decay scale `eta = Q / rho` behind `P(Q > x) = rho * e^(-x/eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    pub rtt: f64,
    pub q: f64,
    pub eta: f64,
    pub rho: f64,
}

/// Invert `ON = m*RTT + n*delta*` for the closed-loop RTT, then read the
/// queue off the RTT inflation: `Q = (RTT - RTT0) / delta`, with `delta` the
/// multiplexing-link packet time. `m`, `n` must come from the renormalized
/// decomposition when the path has a saturable link.
pub fn queue_stats(
    on: f64,
    m: u32,
    n: u64,
    delta_star: f64,
    rtt0: f64,
    mux_delta: f64,
    rho: f64,
) -> Result<QueueModel, ModelError> {
    if m == 0 {
        return Err(ModelError::UnsupportedConfiguration("no rounds to attribute the ON time to"));
    }
    let rtt = (on - n as f64 * delta_star) / m as f64;
    let q = ((rtt - rtt0) / mux_delta).max(0.0);
    let eta = if rho > 0.0 { q / rho } else { 0.0 };
    Ok(QueueModel { rtt, q, eta, rho })
}

/// Overflow estimate for a buffer of `b` packets: `L = rho * e^(-b/eta)`.
pub fn loss_rate(rho: f64, eta: f64, b: f64) -> f64 {
    assert!(eta > 0.0 && b >= 0.0);
    rho * (-b / eta).exp()
}

/// Buffer needed to keep the overflow probability at `l`: `eta * ln(rho/l)`,
/// rounded up to whole packets. A target at or above `rho` needs no buffer.
pub fn buffer_size(rho: f64, eta: f64, l: f64) -> u64 {
    if l >= rho {
        return 0;
    }
    (eta * (rho / l).ln()).ceil() as u64
}

/// Per-round queue contributions of one connection, in units of the
/// bottleneck packet time. `q_mean` averages them over ON0 + OFF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleConnectionQueue {
    /// tau_i per round, in packet times.
    pub round_contributions: Vec<u64>,
    pub q_mean: f64,
}

/// Time-average queue content at the bottleneck for a lone transfer of
/// exactly `file_size` packets, receiver window `w_r`, link BDP `beta`.
///
/// Unsaturated rounds are walked tick by tick: acks from the previous round
/// arrive one packet-time apart, each one slides the window and, while the
/// window still grows, releases a second packet. The saturated closing round
/// uses the ramp-plus-hold approximation
/// `nu*(nu+2) + (F - L_SS)*(nu+1)` with `nu` the window growth left to W_R.
pub fn single_connection_queue_mean(
    file_size: u64,
    w_r: u64,
    beta: f64,
    delta: f64,
    on0: f64,
    off: f64,
) -> Result<SingleConnectionQueue, ModelError> {
    if file_size < 3 {
        return Err(ModelError::UnsupportedConfiguration("file size below 3 packets"));
    }
    let fit = beta.floor() as u64;
    let mut rounds: Vec<u64> = Vec::new();
    let mut window = 2u64;
    let mut prev_flight = 0u64;
    let mut sent = 0u64;
    let mut first = true;
    while sent < file_size {
        let remaining = file_size - sent;
        if window > fit {
            // Saturated: the queue ramps to W_R - prev_flight + 1 and holds
            // until the last packet, one departure replaced per arrival.
            let nu = w_r - prev_flight;
            let l_ss = 2 * w_r - 2;
            let hold = file_size.saturating_sub(l_ss);
            rounds.push(nu * (nu + 2) + hold * (nu + 1));
            break;
        }
        let bursts = if first {
            vec![remaining.min(2)]
        } else {
            // prev_flight acks arrive; each slides the window by one and,
            // until W_R, grows it by one more.
            let mut rem = remaining;
            let mut win = prev_flight;
            let mut b = Vec::with_capacity(prev_flight as usize);
            for _ in 0..prev_flight {
                if rem == 0 {
                    break;
                }
                let grow = win < w_r;
                if grow {
                    win += 1;
                }
                let send = rem.min(if grow { 2 } else { 1 });
                rem -= send;
                b.push(send);
            }
            b
        };
        let flight: u64 = bursts.iter().sum();
        rounds.push(round_queue_area(&bursts));
        sent += flight;
        prev_flight = flight;
        window = (window * 2).min(w_r);
        first = false;
    }
    let total: u64 = rounds.iter().sum();
    let q_mean = total as f64 * delta / (on0 + off);
    Ok(SingleConnectionQueue { round_contributions: rounds, q_mean })
}

/// Queue area (in packet-time units) of one round: bursts arrive one packet
/// time apart into an initially empty queue draining one packet per tick,
/// departures first on ties.
fn round_queue_area(bursts: &[u64]) -> u64 {
    let mut q = 0u64;
    let mut area = 0u64;
    let mut t = 0usize;
    while t < bursts.len() || q > 0 {
        if t > 0 && q > 0 {
            q -= 1;
        }
        if t < bursts.len() {
            q += bursts[t];
        }
        area += q;
        t += 1;
    }
    area
}
