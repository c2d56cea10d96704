//! Measurements collected during a run and the reports derived from them:
//! per-connection records, time-average occupancy of the birth-death
//! monitor, queue-content distributions, and the drop taxonomy.

use serde::Serialize;

use crate::tcp::{TimeoutEvent, TimeoutKind};
use crate::units::{ns_to_ms, ns_to_secs, Nanos};

/// Scalar summary of one completed connection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConnRecord {
    pub src: u32,
    pub size: u64,
    /// First send to final ack, sender side.
    pub duration_ns: Nanos,
    /// First packet at the multiplexing node to final ack; exactly one
    /// ingress packet time shorter than `duration_ns`.
    pub bd_duration_ns: Nanos,
    pub sent_total: u64,
    pub rtx_total: u64,
    pub rtx_fast_recovery: u64,
    pub rtx_timeout: u64,
    pub drops: u64,
    pub timeouts: u64,
    pub td_count: u64,
    pub fr_count: u64,
    pub stall_ns: Nanos,
    /// Queue contents seen by this connection's packets at the bottleneck.
    pub qseen_sum: u64,
    pub qseen_cnt: u64,
    /// Active-source count right after this connection joined.
    pub state_at_activation: u32,
    pub rtt_sample_sum_ns: u128,
    pub rtt_samples: u64,
}

impl ConnRecord {
    pub fn rate_bps(&self, pkt_bytes: u32) -> f64 {
        self.size as f64 * pkt_bytes as f64 * 8.0 / ns_to_secs(self.duration_ns)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeoutRecord {
    pub src: u32,
    pub conn: u64,
    pub seq: u64,
    pub window: u64,
    pub kind: TimeoutKind,
    pub at_ns: Nanos,
    pub stall_ns: Nanos,
}

/// Everything measured in one run.
#[derive(Debug, Clone, Serialize)]
pub struct SimMetrics {
    pub scenario_name: String,
    pub pkt_bytes: u32,
    pub n_sources: u32,
    pub completed: u64,
    pub end_ns: Nanos,
    pub records: Vec<ConnRecord>,
    /// Per-source totals: packets of completed transfers and their durations.
    pub source_pkts: Vec<u64>,
    pub source_dur_ns: Vec<u128>,
    /// Time integral of the number of active connections, per state.
    pub bd_time_ns: Vec<u128>,
    /// Per-activation-state sums: connections, file packets, durations.
    pub state_counts: Vec<u64>,
    pub state_size_sum: Vec<u64>,
    pub state_dur_sum_ns: Vec<u128>,
    /// Time integral of the bottleneck queue length.
    pub queue_time_ns: Vec<u128>,
    /// Queue length seen by each arrival, before joining.
    pub queue_seen: Vec<u64>,
    pub appearing: u64,
    pub dropped: u64,
    pub forwarded: u64,
    pub drops_by_seq: Vec<u64>,
    pub drops_slow_start: u64,
    pub mux_busy_ns: u128,
    pub timeout_events: Vec<TimeoutRecord>,
    /// Histogram data from fast-recovery episodes.
    pub fr_retransmissions: Vec<u64>,
    pub fr_packets_sent: Vec<u64>,
    pub fr_exit_burst: Vec<u64>,
    pub fr_duration_ns: Vec<Nanos>,
    pub fr_recovered: u64,
    pub td_total: u64,
    pub sent_total: u64,
    pub rtx_total: u64,
}

impl SimMetrics {
    /// Mean rate per source: each source's lifetime packets over its
    /// lifetime connection duration, averaged over sources.
    pub fn h_meas_per_source(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (pkts, dur) in self.source_pkts.iter().zip(&self.source_dur_ns) {
            if *dur > 0 {
                sum += *pkts as f64 * self.pkt_bytes as f64 * 8.0 / (*dur as f64 / 1e9);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Aggregate rate: total packets to send over total duration.
    pub fn h_meas_aggregate(&self) -> f64 {
        let pkts: u64 = self.source_pkts.iter().sum();
        let dur: u128 = self.source_dur_ns.iter().sum();
        if dur == 0 {
            return 0.0;
        }
        pkts as f64 * self.pkt_bytes as f64 * 8.0 / (dur as f64 / 1e9)
    }

    /// Cross-check from the occupancy monitor: mean size over the monitor's
    /// ON time plus the ingress packet time it misses.
    pub fn h_meas_bd(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let mean_size: f64 =
            self.records.iter().map(|r| r.size as f64).sum::<f64>() / self.records.len() as f64;
        let mean_bd: f64 = self
            .records
            .iter()
            .map(|r| r.bd_duration_ns as f64)
            .sum::<f64>()
            / self.records.len() as f64;
        let ingress_gap: f64 = self
            .records
            .iter()
            .map(|r| (r.duration_ns - r.bd_duration_ns) as f64)
            .sum::<f64>()
            / self.records.len() as f64;
        mean_size * self.pkt_bytes as f64 * 8.0 / ((mean_bd + ingress_gap) / 1e9)
    }

    /// Mean of per-connection rates; larger than the aggregate definition on
    /// skewed size mixes.
    pub fn h2_mean(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.rate_bps(self.pkt_bytes)).sum::<f64>()
            / self.records.len() as f64
    }

    pub fn on_mean_s(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| ns_to_secs(r.duration_ns)).sum::<f64>()
            / self.records.len() as f64
    }

    pub fn mean_size(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.size as f64).sum::<f64>() / self.records.len() as f64
    }

    /// Dropped over appearing at the bottleneck.
    pub fn loss_rate(&self) -> f64 {
        if self.appearing == 0 {
            0.0
        } else {
            self.dropped as f64 / self.appearing as f64
        }
    }

    /// Bottleneck utilization: busy fraction of the multiplexing link.
    pub fn utilization(&self) -> f64 {
        if self.end_ns == 0 {
            0.0
        } else {
            self.mux_busy_ns as f64 / self.end_ns as f64
        }
    }

    /// Mean round trip as sampled by the senders, ms.
    pub fn mean_rtt_ms(&self) -> f64 {
        let sum: u128 = self.records.iter().map(|r| r.rtt_sample_sum_ns).sum();
        let n: u64 = self.records.iter().map(|r| r.rtt_samples).sum();
        if n == 0 {
            0.0
        } else {
            ns_to_ms((sum / n as u128) as u64)
        }
    }

    /// Time-average occupancy distribution of the active-source count.
    pub fn bd_occupancy(&self) -> Vec<f64> {
        let total: u128 = self.bd_time_ns.iter().sum();
        if total == 0 {
            return vec![0.0; self.bd_time_ns.len()];
        }
        self.bd_time_ns.iter().map(|t| *t as f64 / total as f64).collect()
    }

    pub fn queue_distributions(&self) -> QueueDistributions {
        let total: u128 = self.queue_time_ns.iter().sum();
        let mut time_avg_survival = Vec::new();
        let mut mean_q_time = 0.0;
        if total > 0 {
            let mut above: u128 = total;
            for (len, t) in self.queue_time_ns.iter().enumerate() {
                above -= t;
                time_avg_survival.push(above as f64 / total as f64);
                mean_q_time += len as f64 * *t as f64 / total as f64;
            }
        }
        let arrivals: u64 = self.queue_seen.iter().sum();
        let mut arrival_seen_survival = Vec::new();
        let mut mean_q_seen = 0.0;
        if arrivals > 0 {
            // P(Q >= x) on arrival, x = 1..; index 0 holds P(Q >= 0) = 1.
            let mut at_or_above = arrivals;
            for (len, c) in self.queue_seen.iter().enumerate() {
                arrival_seen_survival.push(at_or_above as f64 / arrivals as f64);
                at_or_above -= c;
                mean_q_seen += len as f64 * *c as f64 / arrivals as f64;
            }
        }
        QueueDistributions { time_avg_survival, arrival_seen_survival, mean_q_time, mean_q_seen }
    }

    /// The loss-event taxonomy of a finite-buffer run.
    pub fn drop_analysis(&self) -> DropReport {
        let to_total = self.timeout_events.len() as u64;
        let count_kind = |k: TimeoutKind| {
            self.timeout_events.iter().filter(|t| t.kind == k).count() as u64
        };
        let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let fr_total = self.fr_recovered;
        let stall_sum: u128 = self.timeout_events.iter().map(|t| t.stall_ns as u128).sum();
        let conns = self.records.len() as u64;
        let rtx_fr_total: u64 = self.records.iter().map(|r| r.rtx_fast_recovery).sum();
        let mean = |v: &[u64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<u64>() as f64 / v.len() as f64
            }
        };
        let recovered_rate_kbps = {
            // Mean per-episode send rate over recovered episodes.
            let mut sum = 0.0;
            let mut n = 0usize;
            for (pkts, dur) in self.fr_packets_sent.iter().zip(&self.fr_duration_ns) {
                if *dur > 0 {
                    sum += *pkts as f64 * self.pkt_bytes as f64 * 8.0 / (*dur as f64 / 1e9) / 1e3;
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        };
        let total_dur_ns: u128 = self.records.iter().map(|r| r.duration_ns as u128).sum();
        let sent_incl_rtx: u64 = self.records.iter().map(|r| r.sent_total).sum();
        DropReport {
            appearing: self.appearing,
            dropped: self.dropped,
            loss_pct: 100.0 * self.loss_rate(),
            to_total,
            to_per_drop_pct: pct(to_total, self.dropped),
            toto_pct: pct(count_kind(TimeoutKind::AfterTimeout), to_total),
            tdto_pct: pct(count_kind(TimeoutKind::DuringRecovery), to_total),
            tobeg_pct: pct(count_kind(TimeoutKind::Beginning), to_total),
            toend_pct: pct(count_kind(TimeoutKind::End), to_total),
            tother_pct: pct(count_kind(TimeoutKind::Other), to_total),
            avg_to_time_ms: if to_total == 0 {
                0.0
            } else {
                ns_to_ms((stall_sum / to_total as u128) as u64)
            },
            avg_to_time_per_conn_ms: if conns == 0 {
                0.0
            } else {
                ns_to_ms((stall_sum / conns as u128) as u64)
            },
            td_total: self.td_total,
            td_per_drop_pct: pct(self.td_total, self.dropped),
            fr_per_td_pct: pct(fr_total, self.td_total),
            avg_pkts_tdfr_per_fr: mean(&self.fr_packets_sent),
            avg_pkts_on_fr: mean(&self.fr_exit_burst),
            avg_tdfr_ms: if self.fr_duration_ns.is_empty() {
                0.0
            } else {
                ns_to_ms(
                    (self.fr_duration_ns.iter().map(|d| *d as u128).sum::<u128>()
                        / self.fr_duration_ns.len() as u128) as u64,
                )
            },
            avg_tdfr_rate_kbps: recovered_rate_kbps,
            rtx_fr_per_drop_pct: pct(rtx_fr_total, self.dropped),
            avg_send_rate_kbps: if total_dur_ns == 0 {
                0.0
            } else {
                sent_incl_rtx as f64 * self.pkt_bytes as f64 * 8.0 / (total_dur_ns as f64 / 1e9)
                    / 1e3
            },
            drops_by_seq: self.drops_by_seq.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueueDistributions {
    /// P(Q > x) as a time average, index x.
    pub time_avg_survival: Vec<f64>,
    /// P(Q >= x) over arrivals, index x.
    pub arrival_seen_survival: Vec<f64>,
    pub mean_q_time: f64,
    pub mean_q_seen: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DropReport {
    pub appearing: u64,
    pub dropped: u64,
    pub loss_pct: f64,
    pub to_total: u64,
    pub to_per_drop_pct: f64,
    pub toto_pct: f64,
    pub tdto_pct: f64,
    pub tobeg_pct: f64,
    pub toend_pct: f64,
    pub tother_pct: f64,
    pub avg_to_time_ms: f64,
    pub avg_to_time_per_conn_ms: f64,
    pub td_total: u64,
    pub td_per_drop_pct: f64,
    pub fr_per_td_pct: f64,
    pub avg_pkts_tdfr_per_fr: f64,
    pub avg_pkts_on_fr: f64,
    pub avg_tdfr_ms: f64,
    pub avg_tdfr_rate_kbps: f64,
    pub rtx_fr_per_drop_pct: f64,
    pub avg_send_rate_kbps: f64,
    pub drops_by_seq: Vec<u64>,
}

/// Timeout events used for `TimeoutEvent` conversion.
pub fn timeout_record(src: u32, conn: u64, ev: &TimeoutEvent) -> TimeoutRecord {
    TimeoutRecord {
        src,
        conn,
        seq: ev.seq,
        window: ev.window,
        kind: ev.kind,
        at_ns: ev.at_ns,
        stall_ns: ev.stall_ns,
    }
}
