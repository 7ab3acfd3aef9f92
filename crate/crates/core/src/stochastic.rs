//! Samplers for durations, decisions and customer arrivals.
//!
//! Every sampler is a pure function of its parameters and a single uniform
//! draw, so a caller controls reproducibility entirely through its stream.

use serde::{Deserialize, Serialize};

use crate::kernel::Minutes;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("triangular parameters ({min}, {mode}, {max}) invalid: {reason}")]
    Triangular {
        min: f64,
        mode: f64,
        max: f64,
        reason: &'static str,
    },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("arrival rate {0} must be finite and non-negative")]
    Rate(f64),
}

/// Triangular duration distribution in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTriangular", into = "RawTriangular")]
pub struct TriangularParams {
    min: Minutes,
    mode: Minutes,
    max: Minutes,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTriangular {
    min: f64,
    mode: f64,
    max: f64,
}

impl TryFrom<RawTriangular> for TriangularParams {
    type Error = ParamError;

    fn try_from(raw: RawTriangular) -> Result<Self, Self::Error> {
        if raw.min == raw.mode && raw.mode == raw.max {
            TriangularParams::constant(raw.min)
        } else {
            TriangularParams::new(raw.min, raw.mode, raw.max)
        }
    }
}

impl From<TriangularParams> for RawTriangular {
    fn from(t: TriangularParams) -> Self {
        RawTriangular {
            min: t.min,
            mode: t.mode,
            max: t.max,
        }
    }
}

impl TriangularParams {
    pub fn new(min: Minutes, mode: Minutes, max: Minutes) -> Result<Self, ParamError> {
        let err = |reason| ParamError::Triangular {
            min,
            mode,
            max,
            reason,
        };
        if !(min.is_finite() && mode.is_finite() && max.is_finite()) {
            return Err(err("values must be finite"));
        }
        if min < 0.0 {
            return Err(err("durations must be non-negative"));
        }
        if mode < min {
            return Err(err("mode < min"));
        }
        if max < mode {
            return Err(err("max < mode"));
        }
        if min >= max {
            return Err(err("min must be strictly below max"));
        }
        Ok(Self { min, mode, max })
    }

    /// Degenerate distribution that always yields `value`.
    pub fn constant(value: Minutes) -> Result<Self, ParamError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ParamError::Triangular {
                min: value,
                mode: value,
                max: value,
                reason: "constant duration must be finite and non-negative",
            });
        }
        Ok(Self {
            min: value,
            mode: value,
            max: value,
        })
    }

    pub fn min(&self) -> Minutes {
        self.min
    }

    pub fn mode(&self) -> Minutes {
        self.mode
    }

    pub fn max(&self) -> Minutes {
        self.max
    }

    pub fn mean(&self) -> Minutes {
        (self.min + self.mode + self.max) / 3.0
    }

    pub fn variance(&self) -> f64 {
        let (a, m, b) = (self.min, self.mode, self.max);
        (a * a + m * m + b * b - a * b - a * m - b * m) / 18.0
    }

    /// Multiplies every parameter by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            min: self.min * factor,
            mode: self.mode * factor,
            max: self.max * factor,
        }
    }
}

/// Inverse-CDF draw from a triangular distribution.
pub fn sample_triangular(params: &TriangularParams, u: f64) -> Minutes {
    let TriangularParams { min, mode, max } = *params;
    let span = max - min;
    if span == 0.0 {
        return min;
    }
    let u = u.clamp(0.0, 1.0);
    let split = (mode - min) / span;
    let x = if u < split {
        min + (u * span * (mode - min)).sqrt()
    } else {
        max - ((1.0 - u) * span * (max - mode)).sqrt()
    };
    x.clamp(min, max)
}

/// Probability of a binary decision.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DecisionProb(f64);

impl DecisionProb {
    pub const NEVER: DecisionProb = DecisionProb(0.0);
    pub const ALWAYS: DecisionProb = DecisionProb(1.0);

    pub fn new(p: f64) -> Result<Self, ParamError> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(ParamError::Probability(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DecisionProb {
    type Error = ParamError;

    fn try_from(p: f64) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<DecisionProb> for f64 {
    fn from(p: DecisionProb) -> f64 {
        p.0
    }
}

pub fn sample_bernoulli(prob: DecisionProb, u: f64) -> bool {
    u < prob.0
}

/// Homogeneous Poisson arrivals, in customers per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ArrivalProfile {
    rate_per_hour: f64,
}

impl ArrivalProfile {
    pub fn new(rate_per_hour: f64) -> Result<Self, ParamError> {
        if rate_per_hour.is_finite() && rate_per_hour >= 0.0 {
            Ok(Self { rate_per_hour })
        } else {
            Err(ParamError::Rate(rate_per_hour))
        }
    }

    pub fn rate_per_hour(&self) -> f64 {
        self.rate_per_hour
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rate_per_hour: self.rate_per_hour * factor,
        }
    }
}

impl TryFrom<f64> for ArrivalProfile {
    type Error = ParamError;

    fn try_from(rate: f64) -> Result<Self, Self::Error> {
        Self::new(rate)
    }
}

impl From<ArrivalProfile> for f64 {
    fn from(p: ArrivalProfile) -> f64 {
        p.rate_per_hour
    }
}

/// Exponential inter-arrival gap in minutes; `None` means the profile generates
/// no arrivals at all.
pub fn sample_interarrival(profile: &ArrivalProfile, u: f64) -> Option<Minutes> {
    if profile.rate_per_hour == 0.0 {
        return None;
    }
    Some(-(1.0 - u).ln() * 60.0 / profile.rate_per_hour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng_stream;
    use proptest::prelude::*;

    fn tri(a: f64, m: f64, b: f64) -> TriangularParams {
        TriangularParams::new(a, m, b).unwrap()
    }

    #[test]
    fn triangular_endpoints_and_mode() {
        let t = tri(1.0, 7.0, 15.0);
        assert_eq!(sample_triangular(&t, 0.0), 1.0);
        let near_one = sample_triangular(&t, 1.0 - 1e-15);
        assert!((near_one - 15.0).abs() < 1e-6, "{near_one}");
        let at_mode = sample_triangular(&t, 6.0 / 14.0);
        assert!((at_mode - 7.0).abs() < 1e-12, "{at_mode}");
    }

    #[test]
    fn triangular_validation() {
        assert!(TriangularParams::new(5.0, 3.0, 10.0).is_err());
        assert!(TriangularParams::new(1.0, 12.0, 10.0).is_err());
        assert!(TriangularParams::new(4.0, 4.0, 4.0).is_err());
        assert!(TriangularParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(TriangularParams::new(0.0, f64::NAN, 1.0).is_err());
        let c = TriangularParams::constant(4.0).unwrap();
        assert_eq!(sample_triangular(&c, 0.3), 4.0);
        // mode on either boundary is allowed
        assert!(TriangularParams::new(1.0, 1.0, 3.0).is_ok());
        assert!(TriangularParams::new(1.0, 3.0, 3.0).is_ok());
    }

    #[test]
    fn triangular_monte_carlo_moments() {
        let t = tri(1.0, 7.0, 15.0);
        let mut s = rng_stream(7, "service");
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_triangular(&t, s.uniform());
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0);
        assert!((mean - 23.0 / 3.0).abs() < 0.02, "mean {mean}");
        assert!((var / t.variance() - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn bernoulli_edges_and_frequency() {
        assert!(!sample_bernoulli(DecisionProb::NEVER, 0.0));
        assert!(sample_bernoulli(DecisionProb::ALWAYS, 0.999_999));
        let p = DecisionProb::new(0.37).unwrap();
        let mut s = rng_stream(11, "decisions");
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_bernoulli(p, s.uniform())).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.37).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn probability_validation() {
        assert!(DecisionProb::new(1.5).is_err());
        assert!(DecisionProb::new(-0.1).is_err());
        assert!(DecisionProb::new(f64::NAN).is_err());
    }

    #[test]
    fn interarrival_values() {
        let p = ArrivalProfile::new(60.0).unwrap();
        let gap = sample_interarrival(&p, 1.0 - (-1.0f64).exp()).unwrap();
        assert!((gap - 1.0).abs() < 1e-12);
        assert_eq!(
            sample_interarrival(&ArrivalProfile::new(0.0).unwrap(), 0.5),
            None
        );
        assert!(ArrivalProfile::new(-3.0).is_err());

        let p = ArrivalProfile::new(30.0).unwrap();
        let mut s = rng_stream(5, "arrivals");
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_interarrival(&p, s.uniform()).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
    }

    proptest! {
        #[test]
        fn triangular_is_monotone_and_bounded(
            a in 0.0f64..20.0,
            w1 in 0.0f64..20.0,
            w2 in 0.01f64..20.0,
            u1 in 0.0f64..1.0,
            u2 in 0.0f64..1.0,
        ) {
            let t = tri(a, a + w1, a + w1 + w2);
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let x_lo = sample_triangular(&t, lo);
            let x_hi = sample_triangular(&t, hi);
            prop_assert!(x_lo <= x_hi);
            prop_assert!(x_lo >= t.min() && x_hi <= t.max());
            prop_assert_eq!(sample_triangular(&t, lo), x_lo);
        }
    }
}
