//! Learners. Every policy talks to the world only through
//! [`AnonymousFeedback`], so none of them can see per-pull rewards.

mod baseline;
mod elimination;
mod ucb;

pub use baseline::UniformRandom;
pub use elimination::{
    alg2_eliminate, alg2_nm, alg2_schedule, Alg2Phase, Alg2Record, Alg2State, ArmElimination, Block,
};
pub use ucb::{
    alg1_default_k, argmax_lowest, default_delta, default_log_inv_delta, ucb_index, Alg1Params,
    Alg1Phase, Alg1Record, Alg1State, ModifiedUcb,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::AnonymousFeedback;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Default initial elimination tolerance.
pub const DEFAULT_INITIAL_TOLERANCE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyId {
    /// Phased UCB.
    Alg1,
    /// Phase-based elimination.
    Alg2,
    /// Phased UCB with `k = 1`, i.e. ignoring the delay.
    VanillaUcb,
    UniformRandom,
}

impl PolicyId {
    pub const ALL: [PolicyId; 4] = [
        PolicyId::Alg1,
        PolicyId::Alg2,
        PolicyId::VanillaUcb,
        PolicyId::UniformRandom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyId::Alg1 => "alg1",
            PolicyId::Alg2 => "alg2",
            PolicyId::VanillaUcb => "vanilla-ucb",
            PolicyId::UniformRandom => "uniform-random",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim())
            .ok_or_else(|| Error::config("policy", format!("unknown policy `{s}`")))
    }
}

impl TryFrom<String> for PolicyId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyId> for String {
    fn from(p: PolicyId) -> String {
        p.as_str().to_owned()
    }
}

/// Parameter overrides, keyed as `alg1.k`, `alg1.delta`, `alg2.delta_tilde_init`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(rename = "alg1.k", default, skip_serializing_if = "Option::is_none")]
    pub alg1_k: Option<usize>,
    #[serde(rename = "alg1.delta", default, skip_serializing_if = "Option::is_none")]
    pub alg1_delta: Option<f64>,
    #[serde(rename = "alg2.delta_tilde_init", default, skip_serializing_if = "Option::is_none")]
    pub alg2_delta_tilde_init: Option<f64>,
}

impl Overrides {
    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| Error::config(key, format!("cannot parse `{value}`: {e}"));
        match key {
            "alg1.k" => self.alg1_k = Some(value.parse().map_err(|e| bad(&e))?),
            "alg1.delta" => self.alg1_delta = Some(value.parse().map_err(|e| bad(&e))?),
            "alg2.delta_tilde_init" => {
                self.alg2_delta_tilde_init = Some(value.parse().map_err(|e| bad(&e))?)
            }
            _ => return Err(Error::config(key, "unknown override")),
        }
        Ok(())
    }
}

/// Parameters a policy actually ran with.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResolvedParams {
    Ucb {
        k: usize,
        delta: f64,
        log_inv_delta: f64,
    },
    Elimination {
        delta_tilde_init: f64,
        /// `n_m` for the first phases, up to the first target reaching `T`.
        schedule_prefix: Vec<u64>,
    },
    None {},
}

/// Verification-relevant trace of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum RunRecord {
    Alg1(Alg1Record),
    Alg2(Alg2Record),
    None,
}

/// A policy bound to its resolved parameters, ready to run.
#[derive(Clone, Debug)]
pub enum Learner {
    Ucb(ModifiedUcb),
    Elimination(ArmElimination),
    Uniform(UniformRandom),
}

impl Learner {
    /// Plays until the horizon and returns the run record.
    pub fn run(self, feedback: &mut dyn AnonymousFeedback) -> Result<RunRecord> {
        match self {
            Learner::Ucb(mut p) => {
                p.run(feedback)?;
                Ok(RunRecord::Alg1(p.into_record()))
            }
            Learner::Elimination(mut p) => {
                p.run(feedback)?;
                Ok(RunRecord::Alg2(p.into_record()))
            }
            Learner::Uniform(mut p) => {
                p.run(feedback)?;
                Ok(RunRecord::None)
            }
        }
    }
}

/// Policy identifier plus overrides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicySpec {
    pub id: PolicyId,
    pub overrides: Overrides,
}

impl PolicySpec {
    pub fn new(id: PolicyId) -> Self {
        Self {
            id,
            overrides: Overrides::default(),
        }
    }

    pub fn with_overrides(id: PolicyId, overrides: Overrides) -> Self {
        Self { id, overrides }
    }

    fn ucb_params(&self, horizon: usize, delay: usize) -> Result<Alg1Params> {
        match self.id {
            PolicyId::VanillaUcb => Alg1Params::resolve(horizon, delay, Some(1), self.overrides.alg1_delta),
            _ => Alg1Params::resolve(horizon, delay, self.overrides.alg1_k, self.overrides.alg1_delta),
        }
    }

    fn initial_tolerance(&self) -> f64 {
        self.overrides
            .alg2_delta_tilde_init
            .unwrap_or(DEFAULT_INITIAL_TOLERANCE)
    }

    pub fn resolve(&self, horizon: usize, delay: usize) -> Result<ResolvedParams> {
        Ok(match self.id {
            PolicyId::Alg1 | PolicyId::VanillaUcb => {
                let p = self.ucb_params(horizon, delay)?;
                ResolvedParams::Ucb {
                    k: p.k,
                    delta: p.delta(),
                    log_inv_delta: p.log_inv_delta,
                }
            }
            PolicyId::Alg2 => {
                let tol = self.initial_tolerance();
                ArmElimination::new(2, horizon, delay, tol)?;
                let mut schedule_prefix = Vec::new();
                for n in alg2_schedule(tol, horizon, delay, 64) {
                    schedule_prefix.push(n);
                    if n >= horizon as u64 {
                        break;
                    }
                }
                ResolvedParams::Elimination {
                    delta_tilde_init: tol,
                    schedule_prefix,
                }
            }
            PolicyId::UniformRandom => ResolvedParams::None {},
        })
    }

    /// Instantiates the learner. `rng` is only consumed by randomized policies.
    pub fn build(&self, num_arms: usize, horizon: usize, delay: usize, rng: StreamRng) -> Result<Learner> {
        Ok(match self.id {
            PolicyId::Alg1 | PolicyId::VanillaUcb => {
                Learner::Ucb(ModifiedUcb::new(self.ucb_params(horizon, delay)?, num_arms))
            }
            PolicyId::Alg2 => Learner::Elimination(ArmElimination::new(
                num_arms,
                horizon,
                delay,
                self.initial_tolerance(),
            )?),
            PolicyId::UniformRandom => Learner::Uniform(UniformRandom::new(rng)),
        })
    }
}
