//! File-size distributions: exponential (E), exponential body with Pareto
//! tail (EP), and exponential body with exponential tail (EE). Sizes are in
//! packets with a hard minimum `A`; the tail holds a fraction `H` of the
//! files.
//!
//! All parameters are derived from a target mean so that the analytic mean
//! of the survival function equals the requested average exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    E,
    Ep,
    Ee,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tail {
    /// Pure exponential body, no knee.
    None,
    /// `H * (k/x)^alpha` above the knee.
    Pareto { alpha: f64 },
    /// `H * exp(-(x-k)/c)` above the knee; `c = omega * mean`.
    Exp { c: f64, omega: f64 },
}

/// A size law with survival function `G(x) = P(X > x)`, fully determined by
/// its parameters. `G(x) = 1` below the minimum `a`, decays as
/// `exp(-(x-a)/b)` in the body, and switches to the tail at the knee `k`
/// where `G(k) = h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeDistribution {
    kind: DistKind,
    a: f64,
    b: f64,
    k: f64,
    h: f64,
    tail: Tail,
    mean: f64,
}

/// Exponential with minimum `a`: mean = a + b.
pub fn derive_exponential(mean: f64, a: f64) -> Result<SizeDistribution, DistError> {
    if !(mean > a) || a < 1.0 {
        return Err(DistError::InvalidParameters("mean must exceed minimum size"));
    }
    Ok(SizeDistribution {
        kind: DistKind::E,
        a,
        b: mean - a,
        k: f64::INFINITY,
        h: 0.0,
        tail: Tail::None,
        mean,
    })
}

/// Exponential body with a Pareto tail holding fraction `h` of the files.
pub fn derive_exp_pareto(mean: f64, a: f64, alpha: f64, h: f64) -> Result<SizeDistribution, DistError> {
    if alpha <= 1.0 {
        return Err(DistError::InvalidParameters("pareto exponent must exceed 1"));
    }
    if !(0.0 < h && h < 1.0) {
        return Err(DistError::InvalidParameters("tail mass must be in (0,1)"));
    }
    let b = (mean - a * (1.0 + h / (alpha - 1.0))) / (1.0 - h - h * h.ln() / (alpha - 1.0));
    if !(b > 0.0) {
        return Err(DistError::InvalidParameters("mean too small for requested tail"));
    }
    let k = a - b * h.ln();
    Ok(SizeDistribution {
        kind: DistKind::Ep,
        a,
        b,
        k,
        h,
        tail: Tail::Pareto { alpha },
        mean,
    })
}

/// Exponential body with an exponential tail of scale `c = omega * mean`.
/// Requires `omega < (mean - a) / (h * mean)` so the body scale stays positive.
pub fn derive_exp_exp(mean: f64, a: f64, h: f64, omega: f64) -> Result<SizeDistribution, DistError> {
    if !(0.0 < h && h < 1.0) {
        return Err(DistError::InvalidParameters("tail mass must be in (0,1)"));
    }
    let c = omega * mean;
    let b = (mean - a - c * h) / (1.0 - h);
    if !(b > 0.0) {
        return Err(DistError::InvalidParameters("tail scale too large for requested mean"));
    }
    let k = a - b * h.ln();
    Ok(SizeDistribution {
        kind: DistKind::Ee,
        a,
        b,
        k,
        h,
        tail: Tail::Exp { c, omega },
        mean,
    })
}

impl SizeDistribution {
    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn min_size(&self) -> f64 {
        self.a
    }

    pub fn body_scale(&self) -> f64 {
        self.b
    }

    /// Knee where the tail takes over; infinite for the pure exponential.
    pub fn knee(&self) -> f64 {
        self.k
    }

    pub fn tail_mass(&self) -> f64 {
        self.h
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tail_scale(&self) -> Option<f64> {
        match self.tail {
            Tail::Exp { c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn pareto_alpha(&self) -> Option<f64> {
        match self.tail {
            Tail::Pareto { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// `G(x) = P(X > x)`; 1 below the minimum, continuous at the knee.
    pub fn survival(&self, x: f64) -> f64 {
        if x < self.a {
            return 1.0;
        }
        if x < self.k {
            return (-(x - self.a) / self.b).exp();
        }
        match self.tail {
            Tail::None => (-(x - self.a) / self.b).exp(),
            Tail::Pareto { alpha } => self.h * (self.k / x).powf(alpha),
            Tail::Exp { c, .. } => self.h * (-(x - self.k) / c).exp(),
        }
    }

    /// Continuous inverse of the survival function: the x with `G(x) = u`.
    pub fn continuous_inverse(&self, u: f64) -> f64 {
        assert!(u > 0.0 && u < 1.0, "u must be in (0,1)");
        if u >= self.h {
            // Body region (also the whole support for E).
            self.a - self.b * u.ln()
        } else {
            match self.tail {
                Tail::None => self.a - self.b * u.ln(),
                Tail::Pareto { alpha } => self.k * (self.h / u).powf(1.0 / alpha),
                Tail::Exp { c, .. } => self.k + c * (self.h / u).ln(),
            }
        }
    }

    /// Draw an integer file size by inverting the survival function at `u`,
    /// rounding to the nearest packet, and clamping at the minimum.
    pub fn sample(&self, u: f64) -> u64 {
        let x = self.continuous_inverse(u);
        let min = self.a.round() as u64;
        (x.round() as u64).max(min)
    }

    /// `∫_t^∞ G(x) dx`, evaluated in closed form per region.
    pub fn survival_integral(&self, t: f64) -> f64 {
        if t < self.a {
            return (self.a - t) + self.survival_integral(self.a);
        }
        if t < self.k {
            // Body contribution down to the knee, then the whole tail.
            let body = self.b * ((-(t - self.a) / self.b).exp() - self.h);
            return body + self.tail_integral();
        }
        match self.tail {
            Tail::None => self.b * (-(t - self.a) / self.b).exp(),
            Tail::Pareto { alpha } => {
                self.h * self.k.powf(alpha) * t.powf(1.0 - alpha) / (alpha - 1.0)
            }
            Tail::Exp { c, .. } => c * self.h * (-(t - self.k) / c).exp(),
        }
    }

    /// `∫_k^∞ G(x) dx` over the tail region only.
    fn tail_integral(&self) -> f64 {
        match self.tail {
            Tail::None => 0.0,
            Tail::Pareto { alpha } => self.h * self.k / (alpha - 1.0),
            Tail::Exp { c, .. } => c * self.h,
        }
    }

    /// Mean implied by the survival function; equals the requested mean.
    pub fn analytic_mean(&self) -> f64 {
        self.a + self.survival_integral(self.a)
    }

    /// Average size of the files in the top-`h` probability mass: the
    /// conditional mean above the threshold `x` with `G(x) = h`.
    pub fn mean_above_tail(&self, h: f64) -> f64 {
        assert!(h > 0.0 && h < 1.0, "tail fraction must be in (0,1)");
        let k_h = self.continuous_inverse(h);
        k_h + self.survival_integral(k_h) / h
    }
}

/// Serializable distribution request; `alpha` applies to EP, `omega` to EE.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DistSpec {
    pub kind: DistKind,
    pub mean: f64,
    #[serde(default = "default_min")]
    pub a: f64,
    #[serde(default = "default_tail_mass")]
    pub h: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_min() -> f64 {
    3.0
}
fn default_tail_mass() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    1.5
}
fn default_omega() -> f64 {
    7.0
}

impl DistSpec {
    pub fn exponential(mean: f64) -> Self {
        DistSpec { kind: DistKind::E, mean, a: 3.0, h: 0.1, alpha: 1.5, omega: 7.0 }
    }

    pub fn build(&self) -> Result<SizeDistribution, DistError> {
        match self.kind {
            DistKind::E => derive_exponential(self.mean, self.a),
            DistKind::Ep => derive_exp_pareto(self.mean, self.a, self.alpha, self.h),
            DistKind::Ee => derive_exp_exp(self.mean, self.a, self.h, self.omega),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent check of the analytic mean: numeric quadrature of the
    // survival function. The Pareto tail is integrated after substituting
    // s = (k/x)^(alpha-1), which maps [k, inf) onto (0, 1].
    fn quadrature_mean(d: &SizeDistribution) -> f64 {
        let simpson = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, steps: usize| -> f64 {
            let n = steps * 2;
            let h = (hi - lo) / n as f64;
            let mut acc = f(lo) + f(hi);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(lo + i as f64 * h);
            }
            acc * h / 3.0
        };
        let a = d.min_size();
        let k = d.knee();
        let mut total = a; // G = 1 on [0, a)
        match (d.kind(), d.pareto_alpha()) {
            (DistKind::E, _) => {
                // Integrate far enough that the truncated mass is negligible.
                let hi = a + 60.0 * d.body_scale();
                total += simpson(&|x| d.survival(x), a, hi, 40_000);
            }
            (DistKind::Ep, Some(alpha)) => {
                total += simpson(&|x| d.survival(x), a, k, 40_000);
                // Tail under x = k * s^(-1/(alpha-1)): finite range, smooth.
                let trans = |s: f64| -> f64 {
                    let x = k * s.powf(-1.0 / (alpha - 1.0));
                    let dxds = k / (alpha - 1.0) * s.powf(-1.0 / (alpha - 1.0) - 1.0);
                    d.survival(x) * dxds
                };
                total += simpson(&trans, 1e-9, 1.0, 40_000);
            }
            (DistKind::Ee, _) => {
                total += simpson(&|x| d.survival(x), a, k, 4_000);
                let hi = k + 60.0 * d.tail_scale().unwrap();
                total += simpson(&|x| d.survival(x), k, hi, 40_000);
            }
            _ => unreachable!(),
        }
        total
    }

    #[test]
    fn exponential_parameters() {
        let d = derive_exponential(12.0, 3.0).unwrap();
        assert_eq!(d.body_scale(), 9.0);
        let d = derive_exponential(5.0, 3.0).unwrap();
        assert_eq!(d.body_scale(), 2.0);
        let d = derive_exponential(3.5, 3.0).unwrap();
        assert_eq!(d.body_scale(), 0.5);
        assert!((d.survival(3.5) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(derive_exponential(3.0, 3.0), Err(DistError::InvalidParameters("mean must exceed minimum size")));
    }

    #[test]
    fn exp_pareto_knees_match_published_values() {
        // (mean, knee) pairs for A=3, alpha=1.5, H=0.1.
        let expected = [
            (5.0, 5.4),
            (12.0, 17.2),
            (22.0, 34.1),
            (36.0, 57.8),
            (80.0, 132.3),
            (120.0, 200.0),
        ];
        for (mean, knee) in expected {
            let d = derive_exp_pareto(mean, 3.0, 1.5, 0.1).unwrap();
            assert!(
                (d.knee() - knee).abs() < 0.05,
                "mean {mean}: knee {} vs {knee}",
                d.knee()
            );
            assert!((d.survival(d.knee()) - 0.1).abs() < 1e-12);
            assert!((d.analytic_mean() - mean).abs() / mean < 1e-9);
        }
    }

    #[test]
    fn exp_exp_parameters() {
        let d = derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap();
        assert!((d.tail_scale().unwrap() - 84.0).abs() < 1e-12);
        assert!((d.body_scale() - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.knee() - 4.535).abs() < 5e-4);

        let d = derive_exp_exp(5.0, 3.0, 0.1, 3.9).unwrap();
        assert!((d.tail_scale().unwrap() - 19.5).abs() < 1e-12);
        assert!((d.body_scale() - 0.05 / 0.9).abs() < 1e-12);

        // omega bound is strict: (12-3)/(0.1*12) = 7.5.
        assert!(derive_exp_exp(12.0, 3.0, 0.1, 7.5).is_err());
    }

    #[test]
    fn survival_basics() {
        let e = derive_exponential(12.0, 3.0).unwrap();
        let ep = derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap();
        let ee = derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap();
        for d in [&e, &ep, &ee] {
            assert_eq!(d.survival(0.0), 1.0);
            assert_eq!(d.survival(2.999), 1.0);
        }
        assert!((ep.survival(ep.knee()) - 0.1).abs() < 1e-12);
        assert!((e.survival(12.0) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn sampling_fixed_points() {
        let e = derive_exponential(12.0, 3.0).unwrap();
        assert_eq!(e.sample(0.999_999), 3);
        assert_eq!(e.sample((-1.0f64).exp()), 12);
        let ep = derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap();
        assert_eq!(ep.sample(0.1), 17); // knee is 17.216
    }

    #[test]
    fn quadrature_confirms_analytic_mean() {
        for d in [
            derive_exponential(12.0, 3.0).unwrap(),
            derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap(),
            derive_exp_pareto(5.0, 3.0, 1.5, 0.1).unwrap(),
            derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap(),
            derive_exp_exp(5.0, 3.0, 0.1, 3.9).unwrap(),
        ] {
            let q = quadrature_mean(&d);
            assert!(
                (q - d.mean()).abs() / d.mean() < 1e-6,
                "{:?}: quadrature {q} vs mean {}",
                d.kind(),
                d.mean()
            );
            assert!((d.analytic_mean() - d.mean()).abs() / d.mean() < 1e-9);
        }
    }

    #[test]
    fn mean_above_tail_matches_published_values() {
        let e = derive_exponential(12.0, 3.0).unwrap();
        let ep = derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap();
        let ee = derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap();
        assert!((e.mean_above_tail(0.1) - 33.0).abs() < 1.0);
        assert!((ep.mean_above_tail(0.1) - 52.0).abs() < 1.0);
        assert!((ee.mean_above_tail(0.1) - 89.0).abs() < 1.0);
    }

    #[test]
    fn sampling_statistics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xD15717);
        let n = 1_000_000usize;

        // E and EE have finite variance: the sample mean must sit within
        // three standard errors of the analytic mean. EP with alpha = 1.5 has
        // infinite variance, so only the tail fraction is checked there.
        let e = derive_exponential(12.0, 3.0).unwrap();
        let ee = derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap();
        let ep = derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap();

        for (d, sd) in [(&e, 9.0f64), (&ee, 36.9f64)] {
            let mut sum = 0.0;
            for _ in 0..n {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                sum += d.sample(u) as f64;
            }
            let mean = sum / n as f64;
            let se = sd / (n as f64).sqrt();
            assert!(
                (mean - d.mean()).abs() < 3.0 * se,
                "{:?}: sample mean {mean} vs {} (se {se})",
                d.kind(),
                d.mean()
            );
        }

        for d in [&ep, &ee] {
            let mut above_cont = 0usize;
            let mut above_int = 0usize;
            for _ in 0..n {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                if d.continuous_inverse(u) > d.knee() {
                    above_cont += 1;
                }
                if (d.sample(u) as f64) > d.knee() {
                    above_int += 1;
                }
            }
            // The underlying draws put exactly H of the mass past the knee.
            let frac = above_cont as f64 / n as f64;
            let se = (0.1f64 * 0.9 / n as f64).sqrt();
            assert!(
                (frac - 0.1).abs() < 3.0 * se,
                "{:?}: tail fraction {frac} (se {se})",
                d.kind()
            );
            // Rounded samples land past the knee exactly when the continuous
            // value clears the next rounding boundary.
            let boundary = d.knee().floor() + 0.5;
            let expect = d.survival(boundary);
            let frac = above_int as f64 / n as f64;
            let se = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!(
                (frac - expect).abs() < 3.0 * se,
                "{:?}: integer tail fraction {frac} vs {expect} (se {se})",
                d.kind()
            );
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(u in 1e-9f64..0.999_999_999, which in 0usize..3) {
            let d = match which {
                0 => derive_exponential(12.0, 3.0).unwrap(),
                1 => derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap(),
                _ => derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap(),
            };
            let x = d.continuous_inverse(u);
            let back = d.survival(x);
            prop_assert!((back - u).abs() < 1e-9 * u.max(1e-3), "u={u} x={x} back={back}");
        }

        #[test]
        fn survival_monotone_nonincreasing(x0 in 0.0f64..500.0, dx in 0.0f64..500.0, which in 0usize..3) {
            let d = match which {
                0 => derive_exponential(12.0, 3.0).unwrap(),
                1 => derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap(),
                _ => derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap(),
            };
            prop_assert!(d.survival(x0 + dx) <= d.survival(x0) + 1e-15);
        }

        #[test]
        fn survival_continuous_at_knee(which in 0usize..2) {
            let d = if which == 0 {
                derive_exp_pareto(12.0, 3.0, 1.5, 0.1).unwrap()
            } else {
                derive_exp_exp(12.0, 3.0, 0.1, 7.0).unwrap()
            };
            let k = d.knee();
            prop_assert!((d.survival(k - 1e-9) - d.survival(k + 1e-9)).abs() < 1e-6);
        }
    }
}
