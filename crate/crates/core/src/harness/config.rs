use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::Instance;
use crate::error::{Error, Result};
use crate::policies::{Overrides, PolicyId, PolicySpec};

/// Largest horizon the runner accepts.
pub const MAX_HORIZON: usize = 100_000_000;
/// Largest ground-truth ledger (steps × delay span) kept for one run.
pub const MAX_LEDGER_CELLS: usize = 1 << 27;
/// Largest number of trace rows held in memory for one policy.
pub const MAX_TRACE_ROWS: usize = 1 << 25;

/// Full description of an experiment. The JSON config file mirrors this
/// struct field for field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: Instance,
    /// Policies to run, each over every replication with matched seeds.
    pub policies: Vec<PolicyId>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Record every `stride`-th step (and always the last one) in the trace.
    #[serde(default = "one")]
    pub stride: usize,
    /// Worker threads; `None` uses the available parallelism. Does not
    /// affect any output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Keep a ledger and run the estimator checks for policies that support them.
    #[serde(default = "yes")]
    pub verify: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(instance: Instance, policies: Vec<PolicyId>) -> Self {
        Self {
            instance,
            policies,
            overrides: Overrides::default(),
            replications: 1,
            seed: 0,
            out_dir: default_out_dir(),
            stride: 1,
            workers: None,
            verify: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        Ok(config)
    }

    pub fn policy_specs(&self) -> Vec<PolicySpec> {
        self.policies
            .iter()
            .map(|&id| PolicySpec::with_overrides(id, self.overrides))
            .collect()
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        if self.policies.is_empty() {
            return Err(Error::config("policies", "at least one policy is required"));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].contains(p) {
                return Err(Error::config("policies", format!("`{p}` listed twice")));
            }
        }
        if self.replications < 1 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.stride < 1 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        for spec in self.policy_specs() {
            spec.resolve(self.instance.horizon, self.instance.delay)?;
        }
        self.check_resources()
    }

    fn check_resources(&self) -> Result<()> {
        let horizon = self.instance.horizon;
        if horizon > MAX_HORIZON {
            return Err(Error::Resource(format!("horizon {horizon} exceeds {MAX_HORIZON}")));
        }
        if self.verify {
            let cells = horizon.saturating_mul(self.instance.delay);
            if cells > MAX_LEDGER_CELLS {
                return Err(Error::Resource(format!(
                    "ledger of {cells} cells exceeds {MAX_LEDGER_CELLS}; disable verification or shrink the run"
                )));
            }
        }
        let rows = (horizon.div_ceil(self.stride) + 1).saturating_mul(self.replications);
        if rows > MAX_TRACE_ROWS {
            return Err(Error::Resource(format!(
                "trace of {rows} rows exceeds {MAX_TRACE_ROWS}; raise the stride"
            )));
        }
        Ok(())
    }
}
