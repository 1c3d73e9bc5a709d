use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule splitting a realized total reward into `d` non-negative components,
/// component `s` being delivered `s` steps after the pull.
///
/// Identifiers: `uniform`, `all-at-start`, `all-at-end`, `dirichlet` (α = 1),
/// `dirichlet(α)` and `block-boundary-adversary`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SpreadPolicy {
    Uniform,
    AllAtStart,
    AllAtEnd,
    Dirichlet { alpha: f64 },
    /// Alternates all-at-start and all-at-end on successive calls.
    BlockBoundaryAdversary,
}

impl SpreadPolicy {
    pub const ALL: [SpreadPolicy; 5] = [
        SpreadPolicy::Uniform,
        SpreadPolicy::AllAtStart,
        SpreadPolicy::AllAtEnd,
        SpreadPolicy::Dirichlet { alpha: 1.0 },
        SpreadPolicy::BlockBoundaryAdversary,
    ];
}

impl fmt::Display for SpreadPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpreadPolicy::Uniform => f.write_str("uniform"),
            SpreadPolicy::AllAtStart => f.write_str("all-at-start"),
            SpreadPolicy::AllAtEnd => f.write_str("all-at-end"),
            SpreadPolicy::Dirichlet { alpha } => write!(f, "dirichlet({alpha})"),
            SpreadPolicy::BlockBoundaryAdversary => f.write_str("block-boundary-adversary"),
        }
    }
}

impl FromStr for SpreadPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => return Ok(SpreadPolicy::Uniform),
            "all-at-start" => return Ok(SpreadPolicy::AllAtStart),
            "all-at-end" => return Ok(SpreadPolicy::AllAtEnd),
            "dirichlet" => return Ok(SpreadPolicy::Dirichlet { alpha: 1.0 }),
            "block-boundary-adversary" => return Ok(SpreadPolicy::BlockBoundaryAdversary),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("dirichlet(").and_then(|r| r.strip_suffix(')')) {
            let alpha: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::config("spread", format!("bad dirichlet concentration `{arg}`")))?;
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::config("spread", "dirichlet concentration must be positive"));
            }
            return Ok(SpreadPolicy::Dirichlet { alpha });
        }
        Err(Error::config("spread", format!("unknown spread policy `{s}`")))
    }
}

impl TryFrom<String> for SpreadPolicy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SpreadPolicy> for String {
    fn from(p: SpreadPolicy) -> String {
        p.to_string()
    }
}

/// The `d` delivery components of one realized reward.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadAssignment {
    components: Vec<f64>,
    total: f64,
}

impl SpreadAssignment {
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }
}

/// Stateful application of a [`SpreadPolicy`].
#[derive(Clone, Debug)]
pub struct Spreader {
    policy: SpreadPolicy,
    calls: u64,
    gamma: Option<Gamma<f64>>,
}

impl Spreader {
    pub fn new(policy: SpreadPolicy) -> Self {
        let gamma = match policy {
            SpreadPolicy::Dirichlet { alpha } => {
                Some(Gamma::new(alpha, 1.0).expect("concentration validated on parse"))
            }
            _ => None,
        };
        Self {
            policy,
            calls: 0,
            gamma,
        }
    }

    pub fn policy(&self) -> SpreadPolicy {
        self.policy
    }

    /// Splits `total` over `d` steps. Only the dirichlet policy draws from `rng`.
    pub fn spread<R: Rng + ?Sized>(&mut self, total: f64, d: usize, rng: &mut R) -> SpreadAssignment {
        assert!(d >= 1, "delay span must be at least 1");
        let call = self.calls;
        self.calls += 1;
        let mut components = vec![0.0; d];
        if d == 1 {
            components[0] = total;
            return SpreadAssignment { components, total };
        }
        match self.policy {
            SpreadPolicy::Uniform => components.fill(total / d as f64),
            SpreadPolicy::AllAtStart => components[0] = total,
            SpreadPolicy::AllAtEnd => components[d - 1] = total,
            SpreadPolicy::BlockBoundaryAdversary => {
                if call.is_multiple_of(2) {
                    components[0] = total;
                } else {
                    components[d - 1] = total;
                }
            }
            SpreadPolicy::Dirichlet { .. } => {
                let gamma = self.gamma.as_ref().expect("dirichlet gamma");
                let mut norm = 0.0;
                for c in components.iter_mut() {
                    *c = gamma.sample(rng);
                    norm += *c;
                }
                if norm > 0.0 && norm.is_finite() {
                    let mut assigned = 0.0;
                    for c in components[..d - 1].iter_mut() {
                        *c = total * (*c / norm);
                        assigned += *c;
                    }
                    components[d - 1] = (total - assigned).max(0.0);
                } else {
                    // every weight underflowed
                    components.fill(0.0);
                    components[0] = total;
                }
            }
        }
        SpreadAssignment { components, total }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn run(policy: SpreadPolicy, total: f64, d: usize) -> Vec<f64> {
        let mut rng = StreamRng::seed_from_u64(0);
        Spreader::new(policy).spread(total, d, &mut rng).into_components()
    }

    #[test]
    fn fixed_policies() {
        assert_eq!(run(SpreadPolicy::Uniform, 0.8, 4), vec![0.2; 4]);
        assert_eq!(run(SpreadPolicy::AllAtEnd, 0.8, 4), vec![0.0, 0.0, 0.0, 0.8]);
        assert_eq!(run(SpreadPolicy::AllAtStart, 0.8, 4), vec![0.8, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_step_delivers_everything() {
        for p in SpreadPolicy::ALL {
            assert_eq!(run(p, 0.37, 1), vec![0.37]);
        }
    }

    #[test]
    fn adversary_alternates() {
        let mut rng = StreamRng::seed_from_u64(0);
        let mut s = Spreader::new(SpreadPolicy::BlockBoundaryAdversary);
        assert_eq!(s.spread(1.0, 3, &mut rng).components(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.spread(1.0, 3, &mut rng).components(), &[0.0, 0.0, 1.0]);
        assert_eq!(s.spread(1.0, 3, &mut rng).components(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn parse_identifiers() {
        for p in SpreadPolicy::ALL {
            assert_eq!(p.to_string().parse::<SpreadPolicy>().unwrap(), p);
        }
        assert_eq!(
            "dirichlet(0.25)".parse::<SpreadPolicy>().unwrap(),
            SpreadPolicy::Dirichlet { alpha: 0.25 }
        );
        assert!(matches!(
            "geometric".parse::<SpreadPolicy>(),
            Err(Error::Config { .. })
        ));
        assert!("dirichlet(-1)".parse::<SpreadPolicy>().is_err());
    }

    proptest! {
        #[test]
        fn assignment_invariants(
            total in 0.0f64..=1.0,
            d in 1usize..40,
            which in 0usize..5,
            alpha in 0.05f64..5.0,
            seed in any::<u64>(),
        ) {
            let policy = match which {
                3 => SpreadPolicy::Dirichlet { alpha },
                i => SpreadPolicy::ALL[i],
            };
            let mut rng = StreamRng::seed_from_u64(seed);
            let mut spreader = Spreader::new(policy);
            for _ in 0..3 {
                let a = spreader.spread(total, d, &mut rng);
                prop_assert_eq!(a.components().len(), d);
                prop_assert!(a.components().iter().all(|&c| c >= 0.0));
                let sum: f64 = a.components().iter().sum();
                prop_assert!((sum - total).abs() <= 1e-12, "sum {} total {}", sum, total);
            }
        }
    }
}
