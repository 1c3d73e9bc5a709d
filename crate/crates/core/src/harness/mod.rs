//! Experiment runner: replicated runs, regret traces, summaries.
//!
//! Replications run in parallel on a dedicated thread pool. Each replication
//! owns its environment and learner, and results are gathered in
//! replication order, so the worker count never changes any output byte.

mod config;
mod probe;
mod trace;

pub use config::{ExperimentConfig, MAX_HORIZON, MAX_LEDGER_CELLS, MAX_TRACE_ROWS};
pub use probe::{fit_exponent, sublinearity_probe, ProbeConfig, ProbeReport};
pub use trace::{compute_pseudo_regret, format_sig, weighted_pulls, RegretTrace, TraceRow, TRACE_HEADER};

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::env::{AnonymousFeedback, Environment, Instance};
use crate::error::{Error, Result};
use crate::policies::{Overrides, PolicyId, PolicySpec, ResolvedParams, RunRecord};
use crate::rng::RunSeeds;
use crate::verify::{self, LemmaSummary, PullCountReport, MIN_PULL_COUNT_REPLICATIONS};

/// Environment wrapper that remembers every action and observation.
struct Recorder<'a> {
    env: &'a mut Environment,
    arms: Vec<usize>,
    observations: Vec<f64>,
}

impl AnonymousFeedback for Recorder<'_> {
    fn num_arms(&self) -> usize {
        self.env.num_arms()
    }

    fn horizon(&self) -> usize {
        self.env.horizon()
    }

    fn time(&self) -> usize {
        self.env.time()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        let x = self.env.pull(arm)?;
        self.arms.push(arm);
        self.observations.push(x);
        Ok(x)
    }
}

/// Outcome of a single replication.
#[derive(Clone, Debug)]
pub struct Replication {
    pub rep: usize,
    pub arms: Vec<usize>,
    pub observations: Vec<f64>,
    pub pulls: Vec<u64>,
    pub final_pseudo_regret: f64,
    /// `μ*·T − Σ_t R_t`.
    pub realized_regret: f64,
    pub conservation_error: f64,
    pub record: RunRecord,
    /// Estimator check, when the run kept a ledger and the policy has one.
    pub lemma: Option<LemmaSummary>,
}

/// Runs one replication of `spec` on `instance`.
pub fn run_replication(
    instance: &Instance,
    spec: &PolicySpec,
    master_seed: u64,
    rep: usize,
    keep_ledger: bool,
) -> Result<Replication> {
    let seeds = RunSeeds::from_master(master_seed, rep as u64);
    let mut env = if keep_ledger {
        Environment::new(instance, &seeds)?
    } else {
        Environment::without_ledger(instance, &seeds)?
    };
    let learner = spec.build(instance.num_arms(), instance.horizon, instance.delay, seeds.policy_rng())?;
    let mut recorder = Recorder {
        env: &mut env,
        arms: Vec::with_capacity(instance.horizon),
        observations: Vec::with_capacity(instance.horizon),
    };
    let record = learner.run(&mut recorder)?;
    let Recorder {
        arms, observations, ..
    } = recorder;

    let mut pulls = vec![0u64; instance.num_arms()];
    for &a in &arms {
        pulls[a] += 1;
    }
    let gaps = instance.gaps();
    let final_pseudo_regret = weighted_pulls(&pulls, &gaps);
    let realized_regret = instance.best_mean() * arms.len() as f64 - env.generated_total();
    let lemma = match (&record, env.ledger()) {
        (RunRecord::Alg1(r), Some(ledger)) => Some(verify::check_lemma1(r, Some(ledger))?.summary()),
        (RunRecord::Alg2(r), Some(ledger)) => Some(verify::check_lemma2(r, Some(ledger))?.summary()),
        _ => None,
    };
    Ok(Replication {
        rep,
        arms,
        observations,
        pulls,
        final_pseudo_regret,
        realized_regret,
        conservation_error: env.conservation_error(),
        record,
        lemma,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stddev: var.sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullCounts {
    pub mean: Vec<f64>,
    pub per_replication: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub lemma: &'static str,
    pub phases_checked: usize,
    pub violations: usize,
    pub exemptions: usize,
    pub max_ratio: f64,
    /// Largest `|delivered + buffered − generated|` over replications.
    pub conservation_max_error: f64,
    pub conservation_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pull_count_bound: Option<PullCountReport>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.conservation_ok
            && self.pull_count_bound.as_ref().is_none_or(PullCountReport::passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyId,
    pub parameters: ResolvedParams,
    pub replications: usize,
    pub final_pseudo_regret: Stats,
    pub final_realized_regret: Stats,
    pub pull_counts: PullCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceFacts {
    pub optimal_arm: usize,
    pub best_mean: f64,
    pub gaps: Vec<f64>,
}

/// The parts of the configuration that determine results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub instance: Instance,
    pub policies: Vec<PolicyId>,
    pub overrides: Overrides,
    pub replications: usize,
    pub seed: u64,
    pub stride: usize,
    pub verify: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ResolvedConfig,
    pub instance: InstanceFacts,
    pub policies: Vec<PolicySummary>,
}

impl ExperimentSummary {
    pub fn verification_passed(&self) -> bool {
        self.policies
            .iter()
            .filter_map(|p| p.verification.as_ref())
            .all(Verification::passed)
    }
}

#[derive(Clone, Debug)]
pub struct PolicyOutput {
    pub policy: PolicyId,
    pub traces: Vec<RegretTrace>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub traces: Vec<PolicyOutput>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))
}

/// Runs every configured policy over all replications.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let instance = &config.instance;
    let pool = thread_pool(config.worker_count())?;
    let mut summaries = Vec::new();
    let mut outputs = Vec::new();
    for spec in config.policy_specs() {
        let keep_ledger = config.verify && spec.id != PolicyId::UniformRandom;
        let reps: Vec<Replication> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| run_replication(instance, &spec, config.seed, rep, keep_ledger))
                .collect::<Result<Vec<_>>>()
        })?;
        let gaps = instance.gaps();
        let traces = reps
            .iter()
            .map(|r| RegretTrace::from_run(r.rep, &r.arms, &r.observations, &gaps, config.stride))
            .collect();
        summaries.push(summarize(config, &spec, &reps)?);
        outputs.push(PolicyOutput {
            policy: spec.id,
            traces,
        });
    }
    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            config: ResolvedConfig {
                instance: instance.clone(),
                policies: config.policies.clone(),
                overrides: config.overrides,
                replications: config.replications,
                seed: config.seed,
                stride: config.stride,
                verify: config.verify,
            },
            instance: InstanceFacts {
                optimal_arm: instance.optimal_arm(),
                best_mean: instance.best_mean(),
                gaps: instance.gaps(),
            },
            policies: summaries,
        },
        traces: outputs,
    })
}

fn summarize(config: &ExperimentConfig, spec: &PolicySpec, reps: &[Replication]) -> Result<PolicySummary> {
    let instance = &config.instance;
    let pseudo: Vec<f64> = reps.iter().map(|r| r.final_pseudo_regret).collect();
    let realized: Vec<f64> = reps.iter().map(|r| r.realized_regret).collect();
    let per_replication: Vec<Vec<u64>> = reps.iter().map(|r| r.pulls.clone()).collect();
    let mean = (0..instance.num_arms())
        .map(|a| per_replication.iter().map(|c| c[a] as f64).sum::<f64>() / reps.len() as f64)
        .collect();

    let verification = if config.verify && spec.id != PolicyId::UniformRandom {
        let lemma = reps
            .iter()
            .filter_map(|r| r.lemma)
            .reduce(LemmaSummary::merge)
            .unwrap_or_default();
        let conservation_max_error = reps.iter().map(|r| r.conservation_error).fold(0.0, f64::max);
        let uses_defaults = spec.id == PolicyId::Alg1
            && spec.overrides.alg1_k.is_none()
            && spec.overrides.alg1_delta.is_none();
        let pull_count_bound = if uses_defaults && reps.len() >= MIN_PULL_COUNT_REPLICATIONS {
            Some(verify::check_pull_count_bound(&per_replication, instance)?)
        } else {
            None
        };
        Some(Verification {
            lemma: if spec.id == PolicyId::Alg2 { "elimination" } else { "phased-ucb" },
            phases_checked: lemma.phases_checked,
            violations: lemma.violations,
            exemptions: lemma.exemptions,
            max_ratio: lemma.max_ratio,
            conservation_max_error,
            conservation_ok: conservation_max_error <= 1e-9 * instance.horizon as f64,
            pull_count_bound,
        })
    } else {
        None
    };

    Ok(PolicySummary {
        policy: spec.id,
        parameters: spec.resolve(instance.horizon, instance.delay)?,
        replications: reps.len(),
        final_pseudo_regret: Stats::of(&pseudo),
        final_realized_regret: Stats::of(&realized),
        pull_counts: PullCounts {
            mean,
            per_replication,
        },
        verification,
    })
}

pub fn trace_path(dir: &Path, policy: PolicyId) -> PathBuf {
    dir.join(format!("{policy}.trace.csv"))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.json")
}

/// Writes one trace CSV per policy and `summary.json` into `dir`.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &output.traces {
        let path = trace_path(dir, p.policy);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "{TRACE_HEADER}")?;
        for trace in &p.traces {
            trace.write_rows(&mut out)?;
        }
        out.flush()?;
        written.push(path);
    }
    let path = summary_path(dir);
    let mut text = serde_json::to_string_pretty(&output.summary)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
