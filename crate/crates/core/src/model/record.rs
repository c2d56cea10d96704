//! One-shot evaluation of the whole analytical pipeline, producing a flat
//! record with every intermediate quantity so table columns can be pulled
//! straight out of the output.

use serde::{Deserialize, Serialize};

use crate::model::engset::{aggregate_rates, EngsetInputs};
use crate::model::flights::{compute_flights, compute_on0, peak_rate, renormalize};
use crate::model::path::{saturation_check, PathInputs, PathParams};
use crate::model::queue::{buffer_size, loss_rate, queue_stats};
use crate::model::ModelError;
use crate::units::{ns_to_ms, ns_to_secs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelInputs {
    pub path: PathInputs,
    pub w_r: u64,
    /// Mean file size, packets.
    pub file_size: u64,
    /// Mean OFF period, s.
    pub off: f64,
    pub n_sources: u32,
    /// Multiplexing buffer, packets; None leaves loss undefined.
    pub buffer: Option<u64>,
    /// Overflow target for buffer sizing (e.g. 0.01).
    pub loss_target: Option<f64>,
}

/// Every symbol the pipeline produces, flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    // Path.
    pub delta_ms: [f64; 3],
    pub delta_star_ms: f64,
    pub mux_delta_ms: f64,
    pub rtt0_ms: f64,
    pub betas: [f64; 3],
    pub beta_star: f64,
    pub r: f64,
    pub saturated_path: bool,
    pub q_sat: Option<u64>,
    // Flights.
    pub flights: Vec<u64>,
    pub m: u32,
    pub n: u64,
    pub m_renorm: u32,
    pub n_renorm: u64,
    pub l_ss: Option<u64>,
    // Single connection.
    pub on0: f64,
    pub on0_ms: f64,
    pub on0_renorm_ms: f64,
    pub h0: f64,
    pub file_bits: f64,
    /// Multiplexing-link capacity, bits/s.
    pub capacity: f64,
    /// Mean OFF period, s.
    pub off: f64,
    // Engset.
    pub n_sources: u32,
    pub s: u32,
    pub p: Vec<f64>,
    pub avg_active: f64,
    pub p_ol: f64,
    pub n_ul: f64,
    pub n_ol: f64,
    pub v_ol: f64,
    pub throughput: f64,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    pub on: f64,
    pub on_ms: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho: f64,
    // Queue.
    pub rtt_ms: f64,
    pub q: f64,
    pub eta: f64,
    pub loss: Option<f64>,
    pub buffer: Option<u64>,
    pub buffer_for_target: Option<u64>,
}

pub fn evaluate(inputs: &ModelInputs) -> Result<ModelRecord, ModelError> {
    let path = PathParams::new(inputs.path);
    let sat = saturation_check(&path, inputs.w_r);
    let sched = compute_flights(inputs.file_size, inputs.w_r, path.beta_star())?;
    let on0_ns = compute_on0(&sched, path.rtt0_ns, path.delta_star_ns);
    let h0 = peak_rate(inputs.file_size, inputs.path.pkt_bytes, on0_ns);
    let file_bits = inputs.file_size as f64 * inputs.path.pkt_bytes as f64 * 8.0;

    let eng = aggregate_rates(&EngsetInputs {
        n_sources: inputs.n_sources,
        off: inputs.off,
        on0: ns_to_secs(on0_ns),
        capacity: inputs.path.c2 as f64,
        file_bits,
    });

    // Queue statistics need the renormalized decomposition whenever some
    // link can saturate (beta* finite always here; renormalize is a no-op
    // when n already fits).
    let (m_renorm, n_renorm) = renormalize(on0_ns, path.rtt0_ns, path.delta_star_ns);
    let qm = queue_stats(
        eng.on,
        m_renorm,
        n_renorm,
        path.delta_star(),
        path.rtt0(),
        path.mux_delta(),
        eng.rho,
    )?;

    let loss = inputs.buffer.map(|b| {
        if qm.eta > 0.0 {
            loss_rate(eng.rho, qm.eta, b as f64)
        } else {
            0.0
        }
    });
    let buffer_for_target = inputs.loss_target.map(|l| {
        if qm.eta > 0.0 {
            buffer_size(eng.rho, qm.eta, l)
        } else {
            0
        }
    });

    Ok(ModelRecord {
        delta_ms: [
            ns_to_ms(path.delta_ns[0]),
            ns_to_ms(path.delta_ns[1]),
            ns_to_ms(path.delta_ns[2]),
        ],
        delta_star_ms: ns_to_ms(path.delta_star_ns),
        mux_delta_ms: ns_to_ms(path.mux_delta_ns),
        rtt0_ms: ns_to_ms(path.rtt0_ns),
        betas: path.betas(),
        beta_star: path.beta_star(),
        r: sat.r,
        saturated_path: sat.saturated,
        q_sat: sat.q_sat,
        flights: sched.flights.clone(),
        m: sched.m,
        n: sched.n,
        m_renorm,
        n_renorm,
        l_ss: sched.l_ss,
        on0: ns_to_secs(on0_ns),
        on0_ms: ns_to_ms(on0_ns),
        on0_renorm_ms: ns_to_ms(m_renorm as u64 * path.rtt0_ns + n_renorm * path.delta_star_ns),
        h0,
        file_bits,
        capacity: inputs.path.c2 as f64,
        off: inputs.off,
        n_sources: inputs.n_sources,
        s: eng.s,
        p: eng.p.clone(),
        avg_active: eng.avg_active,
        p_ol: eng.p_ol,
        n_ul: eng.n_ul,
        n_ol: eng.n_ol,
        v_ol: eng.v_ol,
        throughput: eng.throughput,
        h1: eng.h1,
        h2: eng.h2,
        h: eng.h,
        on: eng.on,
        on_ms: eng.on * 1e3,
        rho0: eng.rho0,
        rho1: eng.rho1,
        rho2: eng.rho2,
        rho: eng.rho,
        rtt_ms: qm.rtt * 1e3,
        q: qm.q,
        eta: qm.eta,
        loss,
        buffer: inputs.buffer,
        buffer_for_target,
    })
}
