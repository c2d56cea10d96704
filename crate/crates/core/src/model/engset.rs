//! Birth-death state probabilities for N homogeneous ON-OFF TCP sources
//! sharing a multiplexing link, and the per-connection rate estimates built
//! on them.
//!
//! Below the overload threshold `s` the sources behave independently; above
//! it the link capacity is shared equally, so the aggregate departure rate
//! pins at C/(F*P*8).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngsetInputs {
    pub n_sources: u32,
    /// Mean OFF period, s.
    pub off: f64,
    /// Lone-transfer duration ON0, s.
    pub on0: f64,
    /// Multiplexing-link capacity, bits/s.
    pub capacity: f64,
    /// Mean transfer volume F*P*8, bits.
    pub file_bits: f64,
}

impl EngsetInputs {
    pub fn peak_rate(&self) -> f64 {
        self.file_bits / self.on0
    }

    /// Overload threshold: how many peak-rate transfers fit the link.
    pub fn overload_threshold(&self) -> u32 {
        (self.capacity / self.peak_rate()) as u32
    }

    /// Open-loop demand `rho0` for this source count.
    pub fn rho0(&self) -> f64 {
        self.on0 / (self.on0 + self.off) * self.n_sources as f64 * self.peak_rate()
            / self.capacity
    }
}

/// Stationary probabilities plus every rate and utilization the model
/// derives from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngsetSolution {
    pub n_sources: u32,
    pub s: u32,
    pub h0: f64,
    pub on0: f64,
    /// Stationary distribution of the number of active sources, index 0..=N.
    pub p: Vec<f64>,
    pub avg_active: f64,
    pub activity: f64,
    pub p_ol: f64,
    pub n_ul: f64,
    pub n_ol: f64,
    pub v_ol: f64,
    pub throughput: f64,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    pub on: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho: f64,
}

/// Stationary distribution of the chain with birth rates
/// `lambda_j = (N - j)/OFF` and death rates `j/ON0` up to `s`, then
/// `C/(F*P*8)` above. Products are accumulated in log space so large source
/// counts cannot overflow.
pub fn engset_probabilities(inp: &EngsetInputs) -> (Vec<f64>, u32) {
    let n = inp.n_sources as usize;
    let s = inp.overload_threshold();
    let over_rate = inp.capacity / inp.file_bits;
    let mut log_pi = Vec::with_capacity(n + 1);
    log_pi.push(0.0f64);
    for j in 1..=n {
        let lambda = (inp.n_sources as f64 - (j as f64 - 1.0)) / inp.off;
        let delta = if j as u32 <= s { j as f64 / inp.on0 } else { over_rate };
        let prev = *log_pi.last().unwrap();
        log_pi.push(prev + lambda.ln() - delta.ln());
    }
    let max = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_pi.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    (p, s)
}

/// Complete the solution: throughput, the two per-connection rate estimates,
/// their average, and the open/closed-loop utilizations.
pub fn aggregate_rates(inp: &EngsetInputs) -> EngsetSolution {
    let (p, s) = engset_probabilities(inp);
    let n = inp.n_sources as usize;
    let h0 = inp.peak_rate();
    let su = (s as usize).min(n);

    let avg_active: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let p_ol: f64 = p[su + 1..].iter().sum();
    let n_ul: f64 = p[1..=su].iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    let n_ol: f64 = p[su + 1..]
        .iter()
        .enumerate()
        .map(|(i, v)| (su + 1 + i) as f64 * v)
        .sum();

    let throughput = h0 * n_ul + inp.capacity * p_ol;
    let h1 = throughput / avg_active;
    let rho1 = throughput / inp.capacity;

    // The overload estimate only exists when overload states carry mass.
    let (h2, v_ol) = if inp.n_sources > s && p_ol > 1e-300 {
        let v = n_ol / p_ol;
        (inp.capacity / v, v)
    } else {
        (h1, 0.0)
    };
    let on2 = inp.file_bits / h2;
    let rho2 = on2 / (on2 + inp.off) * inp.n_sources as f64 * h2 / inp.capacity;

    let h = 0.5 * (h1 + h2);
    let on = inp.file_bits / h;
    let rho = 0.5 * (rho1 + rho2);
    let activity = on / (on + inp.off);

    EngsetSolution {
        n_sources: inp.n_sources,
        s,
        h0,
        on0: inp.on0,
        p,
        avg_active,
        activity,
        p_ol,
        n_ul,
        n_ol,
        v_ol,
        throughput,
        h1,
        h2,
        h,
        on,
        rho0: inp.rho0(),
        rho1,
        rho2,
        rho,
    }
}

/// Smallest N whose open-loop demand reaches `target` (a fraction; 1.0 is
/// 100%). A half-percent-of-a-percent slack absorbs the one-decimal rounding
/// of published load figures.
pub fn solve_n_for_load(off: f64, on0: f64, capacity: f64, file_bits: f64, target: f64) -> u32 {
    let per_source = on0 / (on0 + off) * (file_bits / on0) / capacity;
    let n = ((target - 5e-4) / per_source).ceil();
    (n.max(1.0)) as u32
}
