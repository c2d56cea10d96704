//! Buffer sizing rule: run the model at roughly 100% open-loop demand over a
//! grid of mean file sizes and round trips, size the buffer for a 1% overflow
//! target at each point, and keep the worst case.

use serde::{Deserialize, Serialize};

use crate::model::engset::solve_n_for_load;
use crate::model::record::{evaluate, ModelInputs};
use crate::model::path::PathInputs;
use crate::units::{ms_to_ns, NS_PER_MS};

pub const DEFAULT_FILE_SWEEP: [u64; 8] = [5, 12, 22, 36, 80, 120, 500, 1000];
pub const DEFAULT_RTT_SWEEP_MS: [f64; 2] = [50.0, 300.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulePoint {
    pub file_size: u64,
    pub rtt_ms: f64,
    pub n_sources: u32,
    pub rho0: f64,
    pub rho: f64,
    pub eta: f64,
    pub buffer: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferRuleOutcome {
    pub capacity: u64,
    pub loss_target: f64,
    /// Largest per-point buffer over the sweep.
    pub raw_max: u64,
    /// Raw maximum rounded to the nearest ten packets.
    pub recommended: u64,
    pub max_at: (u64, f64),
    pub points: Vec<RulePoint>,
}

/// Evaluate the rule for a multiplexing link of `capacity` bits/s fed by
/// 100 Mbps sources and drained by fast receivers, W_R = 44, 1500 B packets.
/// Each (F, RTT) pair picks the smallest N with rho0 at or above 100%.
pub fn buffer_rule(
    capacity: u64,
    off: f64,
    w_r: u64,
    files: &[u64],
    rtts_ms: &[f64],
    loss_target: f64,
) -> BufferRuleOutcome {
    let mut points = Vec::new();
    let mut raw_max = 0u64;
    let mut max_at = (0u64, 0.0f64);
    for &rtt_ms in rtts_ms {
        for &file in files {
            let base = PathInputs {
                c1: 100_000_000,
                c2: capacity,
                c3: 1_000_000_000,
                d_ns: 0,
                pkt_bytes: 1500,
                ack_bytes: 40,
            };
            let overhead = crate::model::path::PathParams::tx_overhead_ns(&base);
            let d_ns = ms_to_ns(rtt_ms).saturating_sub(overhead);
            assert!(rtt_ms * NS_PER_MS as f64 > overhead as f64, "target RTT below path overhead");
            let inputs = ModelInputs {
                path: PathInputs { d_ns, ..base },
                w_r,
                file_size: file,
                off,
                n_sources: 0, // filled below
                buffer: None,
                loss_target: Some(loss_target),
            };
            let probe = evaluate(&ModelInputs { n_sources: 1, ..inputs }).expect("rule point");
            let n = solve_n_for_load(off, probe.on0, capacity as f64, probe.file_bits, 1.0);
            let rec = evaluate(&ModelInputs { n_sources: n, ..inputs }).expect("rule point");
            let buffer = rec.buffer_for_target.unwrap_or(0);
            points.push(RulePoint {
                file_size: file,
                rtt_ms,
                n_sources: n,
                rho0: rec.rho0,
                rho: rec.rho,
                eta: rec.eta,
                buffer,
            });
            if buffer > raw_max {
                raw_max = buffer;
                max_at = (file, rtt_ms);
            }
        }
    }
    let recommended = ((raw_max + 5) / 10) * 10;
    BufferRuleOutcome { capacity, loss_target, raw_max, recommended, max_at, points }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximum_sits_at_the_largest_transfers() {
        let out = buffer_rule(10_000_000, 1.0, 44, &DEFAULT_FILE_SWEEP, &DEFAULT_RTT_SWEEP_MS, 0.01);
        assert_eq!(out.max_at.0, 500);
        assert!(out.raw_max > 100);
        // Recommendation is the raw maximum rounded to the nearest ten.
        assert_eq!(out.recommended % 10, 0);
        assert!(out.recommended.abs_diff(out.raw_max) <= 5);
    }
}
