//! Phased UCB: pick the arm with the highest upper confidence bound, then
//! commit to it for `k` consecutive pulls so that reward mass leaking across
//! phase boundaries is amortized over many observations.

use serde::Serialize;

use crate::env::AnonymousFeedback;
use crate::error::{Error, Result};

/// `mean + sqrt(2 log(1/δ) / count)`, or `+∞` for an unplayed arm.
pub fn ucb_index(mean: f64, count: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("alg1.delta", format!("{delta} is outside (0, 1)")));
    }
    Ok(index_from_log(mean, count, -delta.ln()))
}

#[inline]
fn index_from_log(mean: f64, count: u64, log_inv_delta: f64) -> f64 {
    if count == 0 {
        f64::INFINITY
    } else {
        mean + (2.0 * log_inv_delta / count as f64).sqrt()
    }
}

/// `log(1/δ)` for the default confidence `δ = T⁻⁸`.
pub fn default_log_inv_delta(horizon: usize) -> f64 {
    8.0 * (horizon as f64).ln()
}

/// Default confidence `δ = T⁻⁸`. Underflows to 0 for astronomically large
/// horizons; the policy itself works with `log(1/δ)` and is unaffected.
pub fn default_delta(horizon: usize) -> f64 {
    (horizon as f64).powi(-8)
}

/// Default phase length `⌈(d/2)·√(T / log T)⌉`, at least 1.
pub fn alg1_default_k(horizon: usize, delay: usize) -> usize {
    let t = horizon as f64;
    let k = (delay as f64 / 2.0 * (t / t.ln()).sqrt()).ceil();
    (k as usize).max(1)
}

/// Resolved parameters of a phased UCB run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alg1Params {
    pub k: usize,
    pub log_inv_delta: f64,
}

impl Alg1Params {
    /// Defaults for horizon `T` and delay `d`, with optional overrides.
    pub fn resolve(horizon: usize, delay: usize, k: Option<usize>, delta: Option<f64>) -> Result<Self> {
        let k = match k {
            Some(0) => return Err(Error::config("alg1.k", "phase length must be at least 1")),
            Some(k) => k,
            None => alg1_default_k(horizon, delay),
        };
        let log_inv_delta = match delta {
            Some(delta) => {
                ucb_index(0.0, 1, delta)?;
                -delta.ln()
            }
            None => default_log_inv_delta(horizon),
        };
        Ok(Self { k, log_inv_delta })
    }

    pub fn delta(&self) -> f64 {
        (-self.log_inv_delta).exp()
    }
}

/// Per-arm bookkeeping of phased UCB.
#[derive(Clone, Debug)]
pub struct Alg1State {
    plays: Vec<Vec<usize>>,
    sums: Vec<f64>,
    estimates: Vec<f64>,
    phase: usize,
    time: usize,
}

impl Alg1State {
    pub fn new(num_arms: usize) -> Self {
        Self {
            plays: vec![Vec::new(); num_arms],
            sums: vec![0.0; num_arms],
            estimates: vec![0.0; num_arms],
            phase: 0,
            time: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.plays.len()
    }

    /// Times at which `arm` was played, in order.
    pub fn play_times(&self, arm: usize) -> &[usize] {
        &self.plays[arm]
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.plays[arm].len() as u64
    }

    pub fn counts(&self) -> Vec<u64> {
        self.plays.iter().map(|p| p.len() as u64).collect()
    }

    /// Mean observed aggregate over the arm's play times (0 when unplayed).
    pub fn estimate(&self, arm: usize) -> f64 {
        self.estimates[arm]
    }

    /// Completed (possibly truncated) phases.
    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn index(&self, arm: usize, log_inv_delta: f64) -> f64 {
        index_from_log(self.estimates[arm], self.count(arm), log_inv_delta)
    }

    /// Lowest-index maximizer of the UCB index.
    pub fn choose(&self, log_inv_delta: f64) -> usize {
        argmax_lowest((0..self.num_arms()).map(|i| self.index(i, log_inv_delta)))
    }
}

/// Index of the first maximum. Panics on an empty iterator.
pub fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = None::<(usize, f64)>;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.expect("at least one arm").0
}

/// One phase of phased UCB.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Alg1Phase {
    /// 1-based phase number.
    pub phase: usize,
    pub arm: usize,
    pub start: usize,
    pub len: usize,
    /// Estimate of `arm` after the phase.
    pub estimate: f64,
}

/// Everything a phased UCB run did, for later verification.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Alg1Record {
    pub k: usize,
    pub log_inv_delta: f64,
    pub phases: Vec<Alg1Phase>,
}

impl Alg1Record {
    pub fn is_complete(&self, phase: &Alg1Phase) -> bool {
        phase.len == self.k
    }
}

/// Phased UCB for delayed anonymous feedback.
#[derive(Clone, Debug)]
pub struct ModifiedUcb {
    params: Alg1Params,
    state: Alg1State,
    record: Alg1Record,
}

impl ModifiedUcb {
    pub fn new(params: Alg1Params, num_arms: usize) -> Self {
        Self {
            params,
            state: Alg1State::new(num_arms),
            record: Alg1Record {
                k: params.k,
                log_inv_delta: params.log_inv_delta,
                phases: Vec::new(),
            },
        }
    }

    pub fn params(&self) -> Alg1Params {
        self.params
    }

    pub fn state(&self) -> &Alg1State {
        &self.state
    }

    pub fn record(&self) -> &Alg1Record {
        &self.record
    }

    pub fn into_record(self) -> Alg1Record {
        self.record
    }

    pub fn choose(&self) -> usize {
        self.state.choose(self.params.log_inv_delta)
    }

    /// Plays the chosen arm `min(k, T − t)` times and refreshes its estimate.
    /// Returns `None` once the horizon is reached.
    pub fn run_phase(&mut self, feedback: &mut dyn AnonymousFeedback) -> Result<Option<&Alg1Phase>> {
        if feedback.remaining() == 0 {
            return Ok(None);
        }
        let arm = self.choose();
        let start = feedback.time();
        let len = self.params.k.min(feedback.remaining());
        for _ in 0..len {
            let t = feedback.time();
            let x = feedback.pull(arm)?;
            self.state.plays[arm].push(t);
            self.state.sums[arm] += x;
        }
        self.state.time = feedback.time();
        let estimate = self.state.sums[arm] / self.state.plays[arm].len() as f64;
        self.state.estimates[arm] = estimate;
        self.state.phase += 1;
        self.record.phases.push(Alg1Phase {
            phase: self.state.phase,
            arm,
            start,
            len,
            estimate,
        });
        Ok(self.record.phases.last())
    }

    /// Runs phases until the horizon.
    pub fn run(&mut self, feedback: &mut dyn AnonymousFeedback) -> Result<()> {
        while self.run_phase(feedback)?.is_some() {}
        Ok(())
    }
}
