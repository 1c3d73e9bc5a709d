use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdcaf_core::harness::{sublinearity_probe, ProbeConfig};
use sdcaf_core::{run_experiment, write_outputs, Error, ExperimentConfig, Instance, PolicyId, Result, SpreadPolicy};

/// Simulator for bandits with delayed, composite and anonymous feedback.
#[derive(Parser)]
#[command(name = "sdcaf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated experiments and write traces plus a summary.
    Run(RunArgs),
    /// Fit the log-log regret slope of one policy across several horizons.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct Experiment {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated policies: alg1, alg2, vanilla-ucb, uniform-random.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<PolicyId>,
    /// Comma-separated Bernoulli means, replacing the config's arms.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    arms: Vec<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    delay: Option<usize>,
    /// uniform, all-at-start, all-at-end, dirichlet, dirichlet(α), block-boundary-adversary.
    #[arg(long)]
    spread: Option<SpreadPolicy>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Parameter override `key=value`; keys: alg1.k, alg1.delta, alg2.delta_tilde_init.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: Experiment,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    stride: Option<usize>,
    /// Skip the estimator checks and the ground-truth ledger.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    experiment: Experiment,
    /// Comma-separated increasing horizons, at least three.
    #[arg(long, value_delimiter = ',', default_value = "10000,30000,100000")]
    horizons: Vec<usize>,
}

impl Experiment {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            None => {
                let (Some(horizon), Some(delay)) = (self.horizon, self.delay) else {
                    return Err(Error::config("config", "without --config, --arms, --horizon and --delay are required"));
                };
                let spread = self.spread.unwrap_or(SpreadPolicy::Uniform);
                let instance = Instance::bernoulli(&self.arms, delay, horizon, spread)?;
                ExperimentConfig::new(instance, vec![PolicyId::Alg1, PolicyId::Alg2])
            }
        };
        let inst = &mut config.instance;
        if !self.arms.is_empty() {
            *inst = Instance::bernoulli(&self.arms, inst.delay, inst.horizon, inst.spread)?;
        }
        if let Some(h) = self.horizon {
            inst.horizon = h;
        }
        if let Some(d) = self.delay {
            inst.delay = d;
        }
        if let Some(s) = self.spread {
            inst.spread = s;
        }
        if !self.algo.is_empty() {
            config.policies = self.algo.clone();
        }
        if let Some(r) = self.replications {
            config.replications = r;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if self.workers.is_some() {
            config.workers = self.workers;
        }
        for kv in &self.set {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::config("set", format!("expected KEY=VALUE, got `{kv}`")))?;
            config.overrides.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    let mut config = args.experiment.load()?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(s) = args.stride {
        config.stride = s;
    }
    if args.no_verify {
        config.verify = false;
    }
    let output = run_experiment(&config)?;
    let written = write_outputs(&output, &config.out_dir)?;
    for p in &output.summary.policies {
        let verdict = match &p.verification {
            Some(v) if v.passed() => "verified",
            Some(_) => "VERIFICATION FAILED",
            None => "unverified",
        };
        println!(
            "{:<15} pseudo-regret {:>12.2} ± {:<10.2} {verdict}",
            p.policy.as_str(),
            p.final_pseudo_regret.mean,
            p.final_pseudo_regret.stddev
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(output.summary.verification_passed())
}

fn probe(args: &ProbeArgs) -> Result<bool> {
    let config = args.experiment.load()?;
    let mut reports = Vec::new();
    for spec in config.policy_specs() {
        let probe = ProbeConfig {
            instance: config.instance.clone(),
            policy: spec,
            horizons: args.horizons.clone(),
            replications: config.replications,
            seed: config.seed,
            workers: config.workers,
        };
        reports.push(sublinearity_probe(&probe)?);
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Probe(args) => probe(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed; outputs were written");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
