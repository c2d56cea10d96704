//! Time and rate conversions. Simulation time is integer nanoseconds
//! throughout so that equal timestamps are exact and event ordering is
//! deterministic.

pub type Nanos = u64;

pub const NS_PER_SEC: u64 = 1_000_000_000;
pub const NS_PER_MS: u64 = 1_000_000;

/// Transmission time of `bytes` on a link of `bits_per_sec`, rounded to the
/// nearest nanosecond. 1500 B on 2 Mbps comes out at exactly 6 ms.
pub fn tx_time_ns(bytes: u32, bits_per_sec: u64) -> Nanos {
    let num = bytes as u128 * 8 * NS_PER_SEC as u128;
    ((num + bits_per_sec as u128 / 2) / bits_per_sec as u128) as Nanos
}

pub fn ns_to_secs(ns: Nanos) -> f64 {
    ns as f64 / NS_PER_SEC as f64
}

pub fn ns_to_ms(ns: Nanos) -> f64 {
    ns as f64 / NS_PER_MS as f64
}

pub fn secs_to_ns(s: f64) -> Nanos {
    (s * NS_PER_SEC as f64).round() as Nanos
}

pub fn ms_to_ns(ms: f64) -> Nanos {
    (ms * NS_PER_MS as f64).round() as Nanos
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx_times_are_exact_on_round_rates() {
        assert_eq!(tx_time_ns(1500, 2_000_000), 6_000_000);
        assert_eq!(tx_time_ns(1500, 10_000_000), 1_200_000);
        assert_eq!(tx_time_ns(576, 1_500_000), 3_072_000);
        assert_eq!(tx_time_ns(576, 128_000), 36_000_000);
        assert_eq!(tx_time_ns(40, 100_000_000), 3_200);
    }

    #[test]
    fn tx_time_rounds_to_nearest() {
        // 320 bits on 1.5 Mbps is 213333.3 ns.
        assert_eq!(tx_time_ns(40, 1_500_000), 213_333);
    }
}
