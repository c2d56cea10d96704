//! Simulation scenarios and the compact naming scheme used to label runs,
//! e.g. `100M10M2M-R50-W44-B200-F12-EE7-N134`: link capacities, target round
//! trip (R, ms) or raw propagation delay (D, ms), receiver window, buffer,
//! mean file size, size distribution, and source count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistKind, DistSpec};
use crate::model::{ModelInputs, PathInputs, PathParams};
use crate::units::{ms_to_ns, Nanos, NS_PER_SEC};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("unrecognized scenario token `{0}`")]
    BadToken(String),
    #[error("target round trip {0} ms is below the path transmission overhead")]
    RttTooSmall(f64),
    #[error("{0}")]
    Invalid(&'static str),
}

/// How file sizes are chosen per connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileSizes {
    Fixed(u64),
    Sampled(DistSpec),
}

impl FileSizes {
    pub fn mean(&self) -> f64 {
        match self {
            FileSizes::Fixed(n) => *n as f64,
            FileSizes::Sampled(spec) => spec.mean,
        }
    }
}

/// Round-trip specification: either raw propagation delay or a target
/// no-load RTT that the propagation is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundTrip {
    PropagationMs(f64),
    TargetRttMs(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_sources: u32,
    /// Connections to complete before the run stops.
    pub nc: u64,
    pub c1: u64,
    pub c2: u64,
    pub c3: u64,
    pub round_trip: RoundTrip,
    pub pkt_bytes: u32,
    pub ack_bytes: u32,
    pub w_r: u64,
    /// Multiplexing buffer in packets; None is unbounded.
    pub buffer: Option<u64>,
    /// Mean OFF period, seconds.
    pub off_mean: f64,
    pub sizes: FileSizes,
    pub seed: u64,
    /// Timeout floor; the standard 1 s unless configured down.
    pub min_rto_ns: Nanos,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_sources: 1,
            nc: 1,
            c1: 100_000_000,
            c2: 10_000_000,
            c3: 2_000_000,
            round_trip: RoundTrip::TargetRttMs(50.0),
            pkt_bytes: 1500,
            ack_bytes: 40,
            w_r: 44,
            buffer: None,
            off_mean: 1.0,
            sizes: FileSizes::Sampled(DistSpec::exponential(12.0)),
            seed: 1,
            min_rto_ns: NS_PER_SEC,
        }
    }
}

impl Scenario {
    pub fn path_inputs(&self) -> Result<PathInputs, ScenarioError> {
        let base = PathInputs {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            d_ns: 0,
            pkt_bytes: self.pkt_bytes,
            ack_bytes: self.ack_bytes,
        };
        let d_ns = match self.round_trip {
            RoundTrip::PropagationMs(ms) => ms_to_ns(ms),
            RoundTrip::TargetRttMs(ms) => {
                let overhead = PathParams::tx_overhead_ns(&base);
                let target = ms_to_ns(ms);
                if target <= overhead {
                    return Err(ScenarioError::RttTooSmall(ms));
                }
                target - overhead
            }
        };
        Ok(PathInputs { d_ns, ..base })
    }

    pub fn model_inputs(&self) -> Result<ModelInputs, ScenarioError> {
        let mean = self.sizes.mean();
        if mean.fract() != 0.0 && matches!(self.sizes, FileSizes::Fixed(_)) {
            return Err(ScenarioError::Invalid("fixed size must be integral"));
        }
        Ok(ModelInputs {
            path: self.path_inputs()?,
            w_r: self.w_r,
            file_size: mean.round() as u64,
            off: self.off_mean,
            n_sources: self.n_sources,
            buffer: self.buffer,
            loss_target: None,
        })
    }

    /// Parse the compact run label. Tokens are dash-separated and order
    /// free: a capacity run (`100M10M2M`, or two capacities with the 100M
    /// ingress implied), `R<ms>`/`D<ms>`, `W<pkts>`, `B<pkts>`, `F<pkts>`,
    /// `P<bytes>`, `N<count>`, and a distribution tag `E`, `EP`, or
    /// `EE<omega>`/`EE(omega)`.
    pub fn parse_name(name: &str) -> Result<Scenario, ScenarioError> {
        let mut sc = Scenario::default();
        let mut mean_files: Option<f64> = None;
        let mut dist_kind: Option<DistKind> = None;
        let mut omega: Option<f64> = None;
        for token in name.split('-').filter(|t| !t.is_empty()) {
            if let Some(caps) = parse_capacity_run(token) {
                match caps.len() {
                    2 => {
                        sc.c2 = caps[0];
                        sc.c3 = caps[1];
                    }
                    3 => {
                        sc.c1 = caps[0];
                        sc.c2 = caps[1];
                        sc.c3 = caps[2];
                    }
                    _ => return Err(ScenarioError::BadToken(token.into())),
                }
                continue;
            }
            let (head, rest) = split_alpha_prefix(token);
            match head {
                "R" => sc.round_trip = RoundTrip::TargetRttMs(parse_num(token, rest)?),
                "D" => sc.round_trip = RoundTrip::PropagationMs(parse_num(token, rest)?),
                "W" => sc.w_r = parse_num(token, rest)? as u64,
                "B" => sc.buffer = Some(parse_num(token, rest)? as u64),
                "F" => mean_files = Some(parse_num(token, rest)?),
                "P" => sc.pkt_bytes = parse_num(token, rest)? as u32,
                "N" => sc.n_sources = parse_num(token, rest)? as u32,
                "E" if rest.is_empty() => dist_kind = Some(DistKind::E),
                "EP" if rest.is_empty() => dist_kind = Some(DistKind::Ep),
                "EE" => {
                    dist_kind = Some(DistKind::Ee);
                    let inner = rest.trim_start_matches('(').trim_end_matches(')');
                    if !inner.is_empty() {
                        omega = Some(
                            inner
                                .parse()
                                .map_err(|_| ScenarioError::BadToken(token.into()))?,
                        );
                    }
                }
                _ => return Err(ScenarioError::BadToken(token.into())),
            }
        }
        if mean_files.is_some() || dist_kind.is_some() {
            let mean = mean_files.unwrap_or(12.0);
            let kind = dist_kind.unwrap_or(DistKind::E);
            let mut spec = DistSpec { kind, ..DistSpec::exponential(mean) };
            if let Some(w) = omega {
                spec.omega = w;
            }
            sc.sizes = FileSizes::Sampled(spec);
        }
        Ok(sc)
    }

    /// Canonical run label; `parse_name` maps it back to the same scenario.
    pub fn name(&self) -> String {
        let mut parts = vec![format!(
            "{}{}{}",
            fmt_capacity(self.c1),
            fmt_capacity(self.c2),
            fmt_capacity(self.c3)
        )];
        match self.round_trip {
            RoundTrip::TargetRttMs(ms) => parts.push(format!("R{}", trim_float(ms))),
            RoundTrip::PropagationMs(ms) => parts.push(format!("D{}", trim_float(ms))),
        }
        if self.pkt_bytes != 1500 {
            parts.push(format!("P{}", self.pkt_bytes));
        }
        parts.push(format!("W{}", self.w_r));
        if let Some(b) = self.buffer {
            parts.push(format!("B{b}"));
        }
        match self.sizes {
            FileSizes::Fixed(n) => parts.push(format!("F{n}")),
            FileSizes::Sampled(spec) => {
                parts.push(format!("F{}", trim_float(spec.mean)));
                match spec.kind {
                    DistKind::E => parts.push("E".into()),
                    DistKind::Ep => parts.push("EP".into()),
                    DistKind::Ee => parts.push(format!("EE{}", trim_float(spec.omega))),
                }
            }
        }
        parts.push(format!("N{}", self.n_sources));
        parts.join("-")
    }
}

fn trim_float(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn fmt_capacity(bits: u64) -> String {
    if bits % 1_000_000_000 == 0 {
        format!("{}G", bits / 1_000_000_000)
    } else if bits % 1_000_000 == 0 {
        format!("{}M", bits / 1_000_000)
    } else if bits % 1_000 == 0 {
        format!("{}k", bits / 1_000)
    } else {
        format!("{bits}")
    }
}

/// Parse a run of capacity literals like `100M10M2M` or `1.5M128k`.
fn parse_capacity_run(token: &str) -> Option<Vec<u64>> {
    let bytes = token.as_bytes();
    let mut caps = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i == start || i >= bytes.len() {
            return None;
        }
        let value: f64 = token[start..i].parse().ok()?;
        let mult = match bytes[i] {
            b'k' => 1e3,
            b'M' => 1e6,
            b'G' => 1e9,
            _ => return None,
        };
        i += 1;
        caps.push((value * mult).round() as u64);
    }
    if caps.len() >= 2 {
        Some(caps)
    } else {
        None
    }
}

fn split_alpha_prefix(token: &str) -> (&str, &str) {
    let n = token.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    token.split_at(n)
}

fn parse_num(token: &str, rest: &str) -> Result<f64, ScenarioError> {
    rest.parse().map_err(|_| ScenarioError::BadToken(token.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_standard_label() {
        let sc = Scenario::parse_name("100M10M2M-R50-W44-B200-F12-EE7-N134").unwrap();
        assert_eq!((sc.c1, sc.c2, sc.c3), (100_000_000, 10_000_000, 2_000_000));
        assert_eq!(sc.round_trip, RoundTrip::TargetRttMs(50.0));
        assert_eq!(sc.w_r, 44);
        assert_eq!(sc.buffer, Some(200));
        assert_eq!(sc.n_sources, 134);
        match sc.sizes {
            FileSizes::Sampled(spec) => {
                assert_eq!(spec.kind, DistKind::Ee);
                assert_eq!(spec.mean, 12.0);
                assert_eq!(spec.omega, 7.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn two_capacities_imply_the_fast_ingress() {
        let sc = Scenario::parse_name("10M2M-R50-W44-F12-N134").unwrap();
        assert_eq!((sc.c1, sc.c2, sc.c3), (100_000_000, 10_000_000, 2_000_000));
    }

    #[test]
    fn special_setting_label() {
        let sc = Scenario::parse_name("1.5M128k-D300-P576-W44-F347").unwrap();
        assert_eq!((sc.c1, sc.c2, sc.c3), (100_000_000, 1_500_000, 128_000));
        assert_eq!(sc.round_trip, RoundTrip::PropagationMs(300.0));
        assert_eq!(sc.pkt_bytes, 576);
        let path = sc.path_inputs().unwrap();
        let params = PathParams::new(path);
        assert!((params.rtt0() * 1e3 - 341.83).abs() < 0.01);
    }

    #[test]
    fn target_rtt_lands_exactly() {
        let sc = Scenario::parse_name("100M10M2M-R50-W44-F12-N1").unwrap();
        let params = PathParams::new(sc.path_inputs().unwrap());
        assert_eq!(params.rtt0_ns, 50_000_000);
    }

    #[test]
    fn ep_tag_and_round_trip_name() {
        let sc = Scenario::parse_name("100M10M1G-R100-W12-F22-EP-N40").unwrap();
        let name = sc.name();
        let back = Scenario::parse_name(&name).unwrap();
        assert_eq!(back, Scenario { seed: back.seed, nc: back.nc, ..sc });
    }

    #[test]
    fn serde_round_trip() {
        let sc = Scenario::parse_name("100M10M2M-R50-W44-B150-F12-EE7-N134").unwrap();
        let json = serde_json::to_string(&sc).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn rejects_unknown_tokens() {
        assert!(matches!(
            Scenario::parse_name("100M10M2M-X50"),
            Err(ScenarioError::BadToken(_))
        ));
        assert!(matches!(
            Scenario::parse_name("100M10M2M-R0.001"),
            Ok(_)
        ));
        let sc = Scenario::parse_name("100M10M2M-R0.001").unwrap();
        assert!(matches!(sc.path_inputs(), Err(ScenarioError::RttTooSmall(_))));
    }
}
