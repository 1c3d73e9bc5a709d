use rayon::prelude::*;
use serde::Serialize;

use crate::env::Instance;
use crate::error::{Error, Result};
use crate::policies::{PolicyId, PolicySpec};

use super::{run_replication, thread_pool};

/// Regret growth measurement across horizons with matched seeds.
#[derive(Clone, Debug)]
pub struct ProbeConfig {
    /// Template instance; its horizon is replaced by each probed horizon.
    pub instance: Instance,
    pub policy: PolicySpec,
    pub horizons: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub policy: PolicyId,
    pub horizons: Vec<usize>,
    pub mean_final_regret: Vec<f64>,
    /// Least-squares slope of log regret against log horizon.
    pub exponent: f64,
}

impl ProbeReport {
    /// Whether the fitted exponent is clearly below linear growth.
    pub fn is_sublinear(&self, threshold: f64) -> bool {
        self.exponent < threshold
    }
}

/// Least-squares slope of `ln y` on `ln x`. Non-positive `y` values are
/// floored at `1e-12`.
pub fn fit_exponent(xs: &[usize], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.max(1e-12).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the policy at every horizon (replication `r` uses the same seeds at
/// each horizon) and fits the regret growth exponent.
pub fn sublinearity_probe(config: &ProbeConfig) -> Result<ProbeReport> {
    if config.horizons.len() < 3 {
        return Err(Error::config("horizons", "need at least 3 horizons"));
    }
    if config.horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("horizons", "horizons must be strictly increasing"));
    }
    if config.replications < 1 {
        return Err(Error::config("replications", "must be at least 1"));
    }
    let workers = config.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let pool = thread_pool(workers)?;
    let mut means = Vec::with_capacity(config.horizons.len());
    for &horizon in &config.horizons {
        let instance = config.instance.with_horizon(horizon);
        instance.validate()?;
        let regrets: Vec<f64> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| {
                    run_replication(&instance, &config.policy, config.seed, rep, false)
                        .map(|r| r.final_pseudo_regret)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        means.push(regrets.iter().sum::<f64>() / regrets.len() as f64);
    }
    Ok(ProbeReport {
        policy: config.policy.id,
        horizons: config.horizons.clone(),
        exponent: fit_exponent(&config.horizons, &means),
        mean_final_regret: means,
    })
}
