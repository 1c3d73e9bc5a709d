//! Simulated environment with delayed, composite, anonymous feedback.
//!
//! Each pull draws a total reward from the arm's distribution, splits it over
//! the next `d` steps (current step included) and adds the pieces to a ring
//! buffer. The learner only ever receives the buffer slot due now: the sum of
//! every piece scheduled for this step, regardless of which pull produced it.

mod arm;
mod buffer;
mod ledger;
mod spread;

pub use arm::{generate_reward, ArmFamily, ArmSpec};
pub use buffer::PendingBuffer;
pub use ledger::RewardLedger;
pub use spread::{SpreadAssignment, SpreadPolicy, Spreader};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RunSeeds, StreamRng};

/// The only view of the environment a learner gets: pull an arm, receive the
/// aggregate delivered at that step.
pub trait AnonymousFeedback {
    fn num_arms(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Number of pulls made so far.
    fn time(&self) -> usize;
    fn pull(&mut self, arm: usize) -> Result<f64>;

    fn remaining(&self) -> usize {
        self.horizon().saturating_sub(self.time())
    }
}

/// A bandit problem: arms, delay span `d`, horizon `T` and spread rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub arms: Vec<ArmSpec>,
    pub delay: usize,
    pub horizon: usize,
    #[serde(default = "default_spread")]
    pub spread: SpreadPolicy,
}

fn default_spread() -> SpreadPolicy {
    SpreadPolicy::Uniform
}

impl Instance {
    pub fn new(arms: Vec<ArmSpec>, delay: usize, horizon: usize, spread: SpreadPolicy) -> Result<Self> {
        let instance = Self {
            arms,
            delay,
            horizon,
            spread,
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Instance with Bernoulli arms of the given means.
    pub fn bernoulli(means: &[f64], delay: usize, horizon: usize, spread: SpreadPolicy) -> Result<Self> {
        let arms = means
            .iter()
            .map(|&m| ArmSpec::bernoulli(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms, delay, horizon, spread)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.len() < 2 {
            return Err(Error::config(
                "instance.arms",
                format!("need at least 2 arms, got {}", self.arms.len()),
            ));
        }
        if self.delay < 1 {
            return Err(Error::config("instance.delay", "delay span must be at least 1"));
        }
        if self.horizon < 3 {
            return Err(Error::config("instance.horizon", "horizon must be at least 3"));
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmSpec::mean).collect()
    }

    /// Lowest index attaining the largest mean.
    pub fn optimal_arm(&self) -> usize {
        let mut best = 0;
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.mean() > self.arms[best].mean() {
                best = i;
            }
        }
        best
    }

    pub fn best_mean(&self) -> f64 {
        self.arms[self.optimal_arm()].mean()
    }

    /// Per-arm gaps `μ* − μ_i`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.arms.iter().map(|a| best - a.mean()).collect()
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }
}

/// One simulated run of an [`Instance`].
#[derive(Clone, Debug)]
pub struct Environment {
    arms: Vec<ArmSpec>,
    horizon: usize,
    spreader: Spreader,
    reward_rng: StreamRng,
    spread_rng: StreamRng,
    buffer: PendingBuffer,
    ledger: Option<RewardLedger>,
    time: usize,
    generated: f64,
    delivered: f64,
}

impl Environment {
    /// Environment that keeps a full ground-truth ledger.
    pub fn new(instance: &Instance, seeds: &RunSeeds) -> Result<Self> {
        let mut env = Self::without_ledger(instance, seeds)?;
        env.ledger = Some(RewardLedger::with_capacity(instance.delay, instance.horizon));
        Ok(env)
    }

    pub fn without_ledger(instance: &Instance, seeds: &RunSeeds) -> Result<Self> {
        instance.validate()?;
        Ok(Self {
            arms: instance.arms.clone(),
            horizon: instance.horizon,
            spreader: Spreader::new(instance.spread),
            reward_rng: seeds.reward_rng(),
            spread_rng: seeds.spread_rng(),
            buffer: PendingBuffer::new(instance.delay),
            ledger: None,
            time: 0,
            generated: 0.0,
            delivered: 0.0,
        })
    }

    pub fn delay(&self) -> usize {
        self.buffer.span()
    }

    /// Plays `arm` at the current time and returns the aggregate due now.
    pub fn step(&mut self, arm: usize) -> Result<f64> {
        if self.time >= self.horizon {
            return Err(Error::HorizonExhausted {
                horizon: self.horizon,
            });
        }
        let spec = self.arms.get(arm).ok_or_else(|| {
            Error::config("action", format!("arm {arm} out of range 0..{}", self.arms.len()))
        })?;
        let total = generate_reward(spec, &mut self.reward_rng);
        let assignment = self.spreader.spread(total, self.buffer.span(), &mut self.spread_rng);
        self.buffer.schedule(assignment.components());
        let x = self.buffer.deliver();
        if let Some(ledger) = self.ledger.as_mut() {
            ledger.record(arm, total, assignment.components(), x);
        }
        self.generated += total;
        self.delivered += x;
        self.time += 1;
        Ok(x)
    }

    pub fn ledger(&self) -> Option<&RewardLedger> {
        self.ledger.as_ref()
    }

    pub fn into_ledger(self) -> Option<RewardLedger> {
        self.ledger
    }

    /// Mass generated but not yet delivered.
    pub fn residual(&self) -> f64 {
        self.buffer.residual()
    }

    /// Sum of all realized totals so far.
    pub fn generated_total(&self) -> f64 {
        self.generated
    }

    pub fn delivered_total(&self) -> f64 {
        self.delivered
    }

    /// `|delivered + residual − generated|`.
    pub fn conservation_error(&self) -> f64 {
        (self.delivered + self.residual() - self.generated).abs()
    }
}

impl AnonymousFeedback for Environment {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn time(&self) -> usize {
        self.time
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.step(arm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seeds(s: u64) -> RunSeeds {
        RunSeeds::from_master(s, 0)
    }

    fn det(values: &[f64], d: usize, horizon: usize, spread: SpreadPolicy) -> Instance {
        let arms = values.iter().map(|&v| ArmSpec::deterministic(v).unwrap()).collect();
        Instance::new(arms, d, horizon, spread).unwrap()
    }

    #[test]
    fn uniform_spread_trace() {
        let inst = det(&[1.0, 0.0], 2, 3, SpreadPolicy::Uniform);
        let mut env = Environment::new(&inst, &seeds(0)).unwrap();
        let xs: Vec<f64> = (0..3).map(|_| env.step(0).unwrap()).collect();
        assert_eq!(xs, vec![0.5, 1.0, 1.0]);
        assert!(matches!(env.step(0), Err(Error::HorizonExhausted { horizon: 3 })));
        assert_eq!(env.residual(), 0.5);
    }

    #[test]
    fn all_at_end_trace() {
        let inst = det(&[0.6, 0.0], 3, 3, SpreadPolicy::AllAtEnd);
        let mut env = Environment::new(&inst, &seeds(0)).unwrap();
        assert_eq!(env.step(0).unwrap(), 0.0);
        assert_eq!(env.step(1).unwrap(), 0.0);
        assert_eq!(env.step(1).unwrap(), 0.6);
    }

    #[test]
    fn no_delay_observes_totals() {
        let inst = Instance::bernoulli(&[0.3, 0.6, 0.5], 1, 500, SpreadPolicy::Dirichlet { alpha: 1.0 }).unwrap();
        let mut env = Environment::new(&inst, &seeds(4)).unwrap();
        for t in 0..500 {
            env.step(t % 3).unwrap();
        }
        let ledger = env.ledger().unwrap();
        for t in 0..500 {
            assert_eq!(ledger.observed(t).to_bits(), ledger.total(t).to_bits());
        }
    }

    #[test]
    fn no_delay_matches_plain_bandit() {
        let inst = Instance::bernoulli(&[0.3, 0.6], 1, 200, SpreadPolicy::AllAtEnd).unwrap();
        let s = seeds(11);
        let mut env = Environment::new(&inst, &s).unwrap();
        let mut plain = s.reward_rng();
        for t in 0..200 {
            let arm = (t * 7) % 2;
            let x = env.step(arm).unwrap();
            assert_eq!(x.to_bits(), generate_reward(&inst.arms[arm], &mut plain).to_bits());
        }
    }

    #[test]
    fn rejects_bad_actions_and_instances() {
        let inst = det(&[0.1, 0.2], 1, 3, SpreadPolicy::Uniform);
        let mut env = Environment::new(&inst, &seeds(0)).unwrap();
        assert!(matches!(env.step(2), Err(Error::Config { .. })));
        assert!(Instance::bernoulli(&[0.5], 1, 10, SpreadPolicy::Uniform).is_err());
        assert!(Instance::bernoulli(&[0.5, 0.1], 0, 10, SpreadPolicy::Uniform).is_err());
        assert!(Instance::bernoulli(&[0.5, 0.1], 1, 2, SpreadPolicy::Uniform).is_err());
    }

    #[test]
    fn optimal_arm_ties_break_low() {
        let inst = Instance::bernoulli(&[0.2, 0.7, 0.7], 1, 10, SpreadPolicy::Uniform).unwrap();
        assert_eq!(inst.optimal_arm(), 1);
        assert_eq!(inst.gaps(), vec![0.7 - 0.2, 0.0, 0.0]);
    }

    #[test]
    fn spread_policy_does_not_perturb_rewards() {
        let s = seeds(3);
        let a = Instance::bernoulli(&[0.5, 0.5], 4, 300, SpreadPolicy::Uniform).unwrap();
        let b = Instance { spread: SpreadPolicy::Dirichlet { alpha: 0.3 }, ..a.clone() };
        let mut ea = Environment::new(&a, &s).unwrap();
        let mut eb = Environment::new(&b, &s).unwrap();
        for t in 0..300 {
            ea.step(t % 2).unwrap();
            eb.step(t % 2).unwrap();
        }
        assert_eq!(ea.ledger().unwrap().totals(), eb.ledger().unwrap().totals());
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (
            prop::collection::vec(0.0f64..=1.0, 2..5),
            1usize..12,
            3usize..300,
            0usize..5,
        )
            .prop_map(|(means, d, horizon, p)| {
                Instance::bernoulli(&means, d, horizon, SpreadPolicy::ALL[p]).unwrap()
            })
    }

    proptest! {
        #[test]
        fn conservation_and_nonnegativity(inst in arb_instance(), seed in any::<u64>(), picks in prop::collection::vec(0usize..5, 300)) {
            let mut env = Environment::new(&inst, &seeds(seed)).unwrap();
            let k = inst.num_arms();
            for &pick in &picks[..inst.horizon] {
                let x = env.step(pick % k).unwrap();
                prop_assert!(x >= 0.0);
                prop_assert!(x <= inst.delay as f64 + 1e-12);
            }
            prop_assert!(env.conservation_error() <= 1e-9 * inst.horizon as f64);
            let ledger = env.ledger().unwrap();
            for t in 0..inst.horizon {
                prop_assert!(ledger.components(t).iter().all(|&c| c >= 0.0));
                prop_assert_eq!(ledger.reconstruct_observation(t).to_bits(), ledger.observed(t).to_bits());
            }
        }

        #[test]
        fn deterministic_given_seed(inst in arb_instance(), seed in any::<u64>()) {
            let run = || {
                let mut env = Environment::new(&inst, &seeds(seed)).unwrap();
                for t in 0..inst.horizon {
                    env.step(t % inst.num_arms()).unwrap();
                }
                env.into_ledger().unwrap()
            };
            let (a, b) = (run(), run());
            prop_assert_eq!(a.observations(), b.observations());
            prop_assert_eq!(a.totals(), b.totals());
        }
    }
}
