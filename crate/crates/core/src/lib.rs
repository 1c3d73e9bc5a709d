//! Multi-armed bandits with stochastic delayed composite anonymous feedback.
//!
//! A pull's random reward is split into `d` non-negative pieces delivered over
//! the current and next `d − 1` steps, and the learner only observes the
//! per-step sum of whatever pieces fall due. This crate provides:
//!
//! * [`env`]: the simulator, including a ground-truth ledger,
//! * [`policies`]: phased UCB, phase-based elimination and two baselines,
//! * [`verify`]: estimator-error and pull-count checks against the ledger,
//! * [`harness`]: replicated experiments, regret traces and summaries.

pub mod env;
pub mod error;
pub mod harness;
pub mod policies;
pub mod rng;
pub mod verify;

pub use env::{AnonymousFeedback, ArmSpec, Environment, Instance, RewardLedger, SpreadPolicy};
pub use error::{Error, Result};
pub use harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentOutput, ExperimentSummary};
pub use policies::{PolicyId, PolicySpec};
pub use rng::RunSeeds;
