use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward distribution family of an arm. Every family is supported on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArmFamily {
    Bernoulli,
    Beta { alpha: f64, beta: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic,
}

/// An arm's reward distribution together with its mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmRepr", into = "ArmRepr")]
pub struct ArmSpec {
    mean: f64,
    family: ArmFamily,
}

fn unit(field: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::config(field, format!("{value} is outside [0, 1]")))
    }
}

impl ArmSpec {
    pub fn bernoulli(mean: f64) -> Result<Self> {
        Ok(Self {
            mean: unit("arm.mean", mean)?,
            family: ArmFamily::Bernoulli,
        })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Ok(Self {
            mean: unit("arm.value", value)?,
            family: ArmFamily::Deterministic,
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        unit("arm.lo", lo)?;
        unit("arm.hi", hi)?;
        if lo > hi {
            return Err(Error::config("arm.lo", format!("lo {lo} exceeds hi {hi}")));
        }
        Ok(Self {
            mean: 0.5 * (lo + hi),
            family: ArmFamily::Uniform { lo, hi },
        })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        for (field, v) in [("arm.alpha", alpha), ("arm.beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("{v} must be positive and finite")));
            }
        }
        Ok(Self {
            mean: alpha / (alpha + beta),
            family: ArmFamily::Beta { alpha, beta },
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn family(&self) -> ArmFamily {
        self.family
    }
}

/// Draws one reward from `arm`.
///
/// Every family consumes exactly one 64-bit word from `rng`, so reward streams
/// stay aligned across instances that differ only in their families.
pub fn generate_reward<R: RngCore + ?Sized>(arm: &ArmSpec, rng: &mut R) -> f64 {
    let word = rng.next_u64();
    let u = (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    match arm.family {
        ArmFamily::Bernoulli => {
            if u < arm.mean {
                1.0
            } else {
                0.0
            }
        }
        ArmFamily::Uniform { lo, hi } => (lo + (hi - lo) * u).clamp(lo, hi),
        ArmFamily::Deterministic => arm.mean,
        ArmFamily::Beta { alpha, beta } => {
            let mut sub = ChaCha8Rng::seed_from_u64(word);
            // parameters were validated at construction
            let dist = Beta::new(alpha, beta).expect("valid beta parameters");
            dist.sample(&mut sub).clamp(0.0, 1.0)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
enum ArmRepr {
    Bernoulli { mean: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { value: f64 },
}

impl TryFrom<ArmRepr> for ArmSpec {
    type Error = Error;

    fn try_from(repr: ArmRepr) -> Result<Self> {
        match repr {
            ArmRepr::Bernoulli { mean } => ArmSpec::bernoulli(mean),
            ArmRepr::Beta { alpha, beta } => ArmSpec::beta(alpha, beta),
            ArmRepr::Uniform { lo, hi } => ArmSpec::uniform(lo, hi),
            ArmRepr::Deterministic { value } => ArmSpec::deterministic(value),
        }
    }
}

impl From<ArmSpec> for ArmRepr {
    fn from(arm: ArmSpec) -> Self {
        match arm.family {
            ArmFamily::Bernoulli => ArmRepr::Bernoulli { mean: arm.mean },
            ArmFamily::Beta { alpha, beta } => ArmRepr::Beta { alpha, beta },
            ArmFamily::Uniform { lo, hi } => ArmRepr::Uniform { lo, hi },
            ArmFamily::Deterministic => ArmRepr::Deterministic { value: arm.mean },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    #[test]
    fn degenerate_families() {
        let mut r = rng(1);
        assert_eq!(generate_reward(&ArmSpec::deterministic(0.7).unwrap(), &mut r), 0.7);
        let certain = ArmSpec::bernoulli(1.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(generate_reward(&certain, &mut r), 1.0);
        }
        let never = ArmSpec::bernoulli(0.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(generate_reward(&never, &mut r), 0.0);
        }
    }

    #[test]
    fn bernoulli_sample_mean_concentrates() {
        let arm = ArmSpec::bernoulli(0.5).unwrap();
        let mut r = rng(2);
        let n = 100_000;
        let mean = (0..n).map(|_| generate_reward(&arm, &mut r)).sum::<f64>() / n as f64;
        // three standard errors of a fair coin at n = 1e5
        let tol = 3.0 * (0.25f64 / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= tol, "mean {mean} tol {tol}");
    }

    #[test]
    fn derived_means_match_families() {
        let b = ArmSpec::beta(2.0, 6.0).unwrap();
        assert!((b.mean() - 0.25).abs() < 1e-12);
        let u = ArmSpec::uniform(0.2, 0.6).unwrap();
        assert!((u.mean() - 0.4).abs() < 1e-12);

        let mut r = rng(3);
        let n = 200_000;
        for arm in [b, u] {
            let mean = (0..n).map(|_| generate_reward(&arm, &mut r)).sum::<f64>() / n as f64;
            assert!((mean - arm.mean()).abs() < 5e-3, "{arm:?} sample mean {mean}");
        }
    }

    #[test]
    fn one_word_per_sample() {
        let arms = [
            ArmSpec::bernoulli(0.3).unwrap(),
            ArmSpec::beta(0.5, 0.5).unwrap(),
            ArmSpec::uniform(0.0, 1.0).unwrap(),
            ArmSpec::deterministic(0.1).unwrap(),
        ];
        for arm in arms {
            let mut a = rng(9);
            let mut b = rng(9);
            generate_reward(&arm, &mut a);
            b.next_u64();
            assert_eq!(a.next_u64(), b.next_u64(), "{arm:?}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ArmSpec::bernoulli(1.5).is_err());
        assert!(ArmSpec::deterministic(-0.1).is_err());
        assert!(ArmSpec::uniform(0.6, 0.2).is_err());
        assert!(ArmSpec::beta(0.0, 1.0).is_err());
        assert!(serde_json::from_str::<ArmSpec>(r#"{"family":"bernoulli","mean":2.0}"#).is_err());
    }

    #[test]
    fn json_shape() {
        let arm: ArmSpec = serde_json::from_str(r#"{"family":"uniform","lo":0.1,"hi":0.3}"#).unwrap();
        assert!((arm.mean() - 0.2).abs() < 1e-12);
        let text = serde_json::to_string(&ArmSpec::bernoulli(0.9).unwrap()).unwrap();
        assert_eq!(text, r#"{"family":"bernoulli","mean":0.9}"#);
    }
}
