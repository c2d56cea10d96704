//! Experiment driver: load sweeps, model-vs-simulation comparison reports,
//! and per-size-interval statistics.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{evaluate, ModelRecord};
use crate::netsim::{run_scenario, Scenario, ScenarioError, SimMetrics};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("model failure: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("scenario mismatch: {0}")]
    Mismatch(&'static str),
}

/// Percent error with the usual sign convention: positive when the model
/// exceeds the measurement.
pub fn percent_error(model: f64, measured: f64) -> f64 {
    100.0 * (model - measured) / measured
}

/// Connections needed so a run pushes roughly ten million packets through
/// the bottleneck, divided by `divisor` (10 for desk-scale runs).
pub fn nc_for_mean_size(mean_size: f64, divisor: u64) -> u64 {
    let full = 1.0e7 / mean_size;
    ((full / divisor as f64).round() as u64).max(1)
}

/// Smallest N whose open-loop demand reaches `target`, from a scenario
/// without a source count.
pub fn solve_n_for_load(sc: &Scenario, target: f64) -> Result<u32, HarnessError> {
    let mut inputs = sc.model_inputs()?;
    inputs.n_sources = 1;
    let rec = evaluate(&inputs)?;
    Ok(crate::model::solve_n_for_load(
        sc.off_mean,
        rec.on0,
        sc.c2 as f64,
        rec.file_bits,
        target,
    ))
}

/// What an axis sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepAxis {
    Sources(Vec<u32>),
    LoadTargets(Vec<f64>),
    Buffers(Vec<u64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axis: SweepAxis,
    /// Independent replications per point, averaged in the report.
    pub replications: u32,
    /// Divisor applied to the ten-million-packet run length.
    pub scale_divisor: u64,
    pub simulate: bool,
}

impl SweepSpec {
    pub fn new(base: Scenario, axis: SweepAxis) -> Self {
        SweepSpec { base, axis, replications: 1, scale_divisor: 10, simulate: true }
    }
}

/// One sweep point: the model record plus (optionally) per-replication
/// simulation summaries.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub scenario: Scenario,
    pub model: ModelRecord,
    pub comparisons: Vec<ComparisonReport>,
}

/// Expand the axis into concrete scenarios.
pub fn expand_axis(spec: &SweepSpec) -> Result<Vec<Scenario>, HarnessError> {
    let mut out = Vec::new();
    match &spec.axis {
        SweepAxis::Sources(list) => {
            for &n in list {
                out.push(Scenario { n_sources: n, ..spec.base });
            }
        }
        SweepAxis::LoadTargets(targets) => {
            for &t in targets {
                let n = solve_n_for_load(&spec.base, t)?;
                out.push(Scenario { n_sources: n, ..spec.base });
            }
        }
        SweepAxis::Buffers(list) => {
            for &b in list {
                out.push(Scenario { buffer: Some(b), ..spec.base });
            }
        }
    }
    Ok(out)
}

/// Run the sweep; points run in parallel, each owning its simulator.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>, HarnessError> {
    let scenarios = expand_axis(spec)?;
    let nc = nc_for_mean_size(spec.base.sizes.mean(), spec.scale_divisor);
    scenarios
        .into_par_iter()
        .map(|mut sc| {
            sc.nc = nc;
            let model = evaluate(&sc.model_inputs()?)?;
            let mut comparisons = Vec::new();
            if spec.simulate {
                for rep in 0..spec.replications {
                    let seeded = Scenario { seed: sc.seed.wrapping_add(rep as u64), ..sc };
                    let metrics = run_scenario(&seeded)?;
                    comparisons.push(compare(&model, &metrics)?);
                }
            }
            Ok(SweepPoint { scenario: sc, model, comparisons })
        })
        .collect()
}

/// Model column next to its measured counterpart, with the percent error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Compared {
    pub model: f64,
    pub measured: f64,
    pub error_pct: f64,
}

fn compared(model: f64, measured: f64) -> Compared {
    Compared { model, measured, error_pct: percent_error(model, measured) }
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupancyRow {
    pub state: u32,
    pub model_p: f64,
    pub measured_p: f64,
}

/// Measured capacity share per occupancy state (kept at ten or more
/// samples): `j * (P * mean_size_j / mean_on_j) / C`.
#[derive(Debug, Clone, Serialize)]
pub struct SharingRow {
    pub state: u32,
    pub samples: u64,
    pub measured_share: f64,
    /// The model's piecewise-linear share: j*h0/C up to s, then 1.
    pub model_share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueueOverlayRow {
    pub threshold: u64,
    pub model_survival: f64,
    pub time_avg_survival: f64,
    pub arrival_seen_survival: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub scenario_name: String,
    pub h: Compared,
    pub on_ms: Compared,
    pub rho: Compared,
    /// Loss columns only exist for finite buffers.
    pub loss_pct: Option<Compared>,
    pub h_meas_aggregate: f64,
    pub h2_mean: f64,
    pub mean_rtt_ms: f64,
    pub occupancy: Vec<OccupancyRow>,
    pub sharing: Vec<SharingRow>,
    pub queue_overlay: Vec<QueueOverlayRow>,
}

pub const SHARING_MIN_SAMPLES: u64 = 10;

/// Build the full comparison for one matched (model, simulation) pair.
pub fn compare(model: &ModelRecord, sim: &SimMetrics) -> Result<ComparisonReport, HarnessError> {
    if model.n_sources != sim.n_sources {
        return Err(HarnessError::Mismatch("source counts differ"));
    }
    let occ = sim.bd_occupancy();
    let occupancy = model
        .p
        .iter()
        .enumerate()
        .map(|(j, &p)| OccupancyRow {
            state: j as u32,
            model_p: p,
            measured_p: occ.get(j).copied().unwrap_or(0.0),
        })
        .collect();

    let cap = model.capacity;
    let mut sharing = Vec::new();
    for j in 1..sim.state_counts.len() {
        let count = sim.state_counts[j];
        if count < SHARING_MIN_SAMPLES {
            continue;
        }
        let mean_size = sim.state_size_sum[j] as f64 / count as f64;
        let mean_on = sim.state_dur_sum_ns[j] as f64 / count as f64 / 1e9;
        let h_j = mean_size * sim.pkt_bytes as f64 * 8.0 / mean_on;
        sharing.push(SharingRow {
            state: j as u32,
            samples: count,
            measured_share: j as f64 * h_j / cap,
            model_share: (j as f64 * model.h0 / cap).min(1.0),
        });
    }

    let qd = sim.queue_distributions();
    let horizon = qd
        .time_avg_survival
        .len()
        .max(qd.arrival_seen_survival.len());
    let queue_overlay = (0..horizon)
        .map(|x| QueueOverlayRow {
            threshold: x as u64,
            model_survival: if model.eta > 0.0 {
                model.rho * (-(x as f64) / model.eta).exp()
            } else {
                0.0
            },
            time_avg_survival: qd.time_avg_survival.get(x).copied().unwrap_or(0.0),
            arrival_seen_survival: qd.arrival_seen_survival.get(x).copied().unwrap_or(0.0),
        })
        .collect();

    let loss_pct = model
        .loss
        .map(|l| compared(l * 100.0, 100.0 * sim.loss_rate()));

    Ok(ComparisonReport {
        scenario_name: sim.scenario_name.clone(),
        h: compared(model.h, sim.h_meas_per_source()),
        on_ms: compared(model.on_ms, sim.on_mean_s() * 1e3),
        rho: compared(model.rho, sim.utilization()),
        loss_pct,
        h_meas_aggregate: sim.h_meas_aggregate(),
        h2_mean: sim.h2_mean(),
        mean_rtt_ms: sim.mean_rtt_ms(),
        occupancy,
        sharing,
        queue_overlay,
    })
}

/// Table-style per-size-interval statistics. Interval bounds follow the
/// standard breakdown (3-6, 7-14, 15-30, ... >4096).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntervalRow {
    pub lo: u64,
    pub hi: u64,
    pub share_pct: f64,
    pub mean_size: f64,
    /// Aggregate rate: total packets over total duration.
    pub h_bps: f64,
    /// Mean of per-connection rates; at a fixed size this always exceeds
    /// the aggregate definition.
    pub h2_bps: f64,
    pub mean_queue_seen: f64,
    pub to_per_drop_pct: f64,
    pub rtx_fr_per_drop_pct: f64,
    pub to_time_per_on_pct: f64,
}

pub const DEFAULT_INTERVALS: [(u64, u64); 11] = [
    (3, 6),
    (7, 14),
    (15, 30),
    (31, 62),
    (63, 128),
    (129, 256),
    (257, 512),
    (513, 1024),
    (1025, 2048),
    (2049, 4096),
    (4097, u64::MAX),
];

pub fn size_interval_stats(sim: &SimMetrics, intervals: &[(u64, u64)]) -> Vec<IntervalRow> {
    let total = sim.records.len() as f64;
    let mut rows = Vec::new();
    for &(lo, hi) in intervals {
        let recs: Vec<_> = sim
            .records
            .iter()
            .filter(|r| r.size >= lo && r.size <= hi)
            .collect();
        if recs.is_empty() {
            continue;
        }
        let n = recs.len() as f64;
        let size_sum: f64 = recs.iter().map(|r| r.size as f64).sum();
        let dur_sum: f64 = recs.iter().map(|r| r.duration_ns as f64 / 1e9).sum();
        let h = size_sum * sim.pkt_bytes as f64 * 8.0 / dur_sum;
        let h2 = recs.iter().map(|r| r.rate_bps(sim.pkt_bytes)).sum::<f64>() / n;
        let qsum: u64 = recs.iter().map(|r| r.qseen_sum).sum();
        let qcnt: u64 = recs.iter().map(|r| r.qseen_cnt).sum();
        let drops: u64 = recs.iter().map(|r| r.drops).sum();
        let tos: u64 = recs.iter().map(|r| r.timeouts).sum();
        let rtx_fr: u64 = recs.iter().map(|r| r.rtx_fast_recovery).sum();
        let stall: f64 = recs.iter().map(|r| r.stall_ns as f64).sum();
        let on: f64 = recs.iter().map(|r| r.duration_ns as f64).sum();
        rows.push(IntervalRow {
            lo,
            hi,
            share_pct: 100.0 * n / total,
            mean_size: size_sum / n,
            h_bps: h,
            h2_bps: h2,
            mean_queue_seen: if qcnt == 0 { 0.0 } else { qsum as f64 / qcnt as f64 },
            to_per_drop_pct: if drops == 0 { 0.0 } else { 100.0 * tos as f64 / drops as f64 },
            rtx_fr_per_drop_pct: if drops == 0 {
                0.0
            } else {
                100.0 * rtx_fr as f64 / drops as f64
            },
            to_time_per_on_pct: 100.0 * stall / on,
        });
    }
    rows
}
