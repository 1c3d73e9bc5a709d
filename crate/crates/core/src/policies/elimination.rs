//! Phase-based arm elimination. Each phase tops every active arm up to a
//! cumulative pull target `n_m`, drops arms whose estimate trails the best by
//! more than the current tolerance, then halves the tolerance.

use serde::Serialize;

use crate::env::AnonymousFeedback;
use crate::error::{Error, Result};

/// Cumulative pull target for phase `m` with tolerance `tolerance`:
///
/// `⌈(√L + √(L + 4·tolerance·m·(d−1)))² / (2·tolerance²)⌉`, with
/// `L = max(log(T·tolerance²), 1)`. Saturates at `u64::MAX`.
pub fn alg2_nm(m: u32, tolerance: f64, horizon: f64, delay: usize) -> u64 {
    debug_assert!(tolerance > 0.0);
    let log_term = (horizon * tolerance * tolerance).ln().max(1.0);
    let spill = 4.0 * tolerance * m as f64 * delay.saturating_sub(1) as f64;
    let root = log_term.sqrt() + (log_term + spill).sqrt();
    let n = (root * root / (2.0 * tolerance * tolerance)).ceil();
    // float-to-int casts saturate
    (n as u64).max(1)
}

/// Targets `n_1, n_2, …` for the first `phases` phases.
pub fn alg2_schedule(initial_tolerance: f64, horizon: usize, delay: usize, phases: u32) -> Vec<u64> {
    (1..=phases)
        .map(|m| alg2_nm(m, tolerance_at(initial_tolerance, m), horizon as f64, delay))
        .collect()
}

fn tolerance_at(initial: f64, m: u32) -> f64 {
    let mut tol = initial;
    for _ in 1..m {
        tol /= 2.0;
    }
    tol
}

/// Drops every active arm whose estimate plus `tolerance` is strictly below
/// the best active estimate. `estimates` is indexed by arm id.
pub fn alg2_eliminate(active: &[usize], estimates: &[f64], tolerance: f64) -> Vec<usize> {
    let best = active
        .iter()
        .map(|&i| estimates[i])
        .fold(f64::NEG_INFINITY, f64::max);
    active
        .iter()
        .copied()
        .filter(|&i| estimates[i] + tolerance >= best)
        .collect()
}

#[derive(Clone, Debug)]
pub struct Alg2State {
    active: Vec<usize>,
    tolerance: f64,
    phase: u32,
    plays: Vec<Vec<usize>>,
    sums: Vec<f64>,
    estimates: Vec<f64>,
}

impl Alg2State {
    pub fn new(num_arms: usize, initial_tolerance: f64) -> Self {
        Self {
            active: (0..num_arms).collect(),
            tolerance: initial_tolerance,
            phase: 1,
            plays: vec![Vec::new(); num_arms],
            sums: vec![0.0; num_arms],
            estimates: vec![0.0; num_arms],
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Tolerance of the current phase.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Current 1-based phase.
    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn play_times(&self, arm: usize) -> &[usize] {
        &self.plays[arm]
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.plays[arm].len() as u64
    }

    pub fn counts(&self) -> Vec<u64> {
        self.plays.iter().map(|p| p.len() as u64).collect()
    }

    pub fn estimate(&self, arm: usize) -> f64 {
        self.estimates[arm]
    }
}

/// A contiguous run of pulls of one arm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub arm: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Alg2Phase {
    pub phase: u32,
    pub tolerance: f64,
    pub target: u64,
    /// Active set at the start of the phase, ascending.
    pub active: Vec<usize>,
    pub blocks: Vec<Block>,
    /// `(arm, cumulative pulls, estimate)` for each active arm after play.
    pub arms: Vec<(usize, u64, f64)>,
    /// Active set for the next phase; `None` when the horizon cut the phase short.
    pub survivors: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Alg2Record {
    pub initial_tolerance: f64,
    pub phases: Vec<Alg2Phase>,
}

/// Phase-based elimination for delayed anonymous feedback.
#[derive(Clone, Debug)]
pub struct ArmElimination {
    horizon: usize,
    delay: usize,
    state: Alg2State,
    record: Alg2Record,
}

impl ArmElimination {
    pub fn new(num_arms: usize, horizon: usize, delay: usize, initial_tolerance: f64) -> Result<Self> {
        if !(initial_tolerance.is_finite() && initial_tolerance > 0.0) {
            return Err(Error::config(
                "alg2.delta_tilde_init",
                format!("{initial_tolerance} must be positive and finite"),
            ));
        }
        Ok(Self {
            horizon,
            delay,
            state: Alg2State::new(num_arms, initial_tolerance),
            record: Alg2Record {
                initial_tolerance,
                phases: Vec::new(),
            },
        })
    }

    pub fn state(&self) -> &Alg2State {
        &self.state
    }

    pub fn record(&self) -> &Alg2Record {
        &self.record
    }

    pub fn into_record(self) -> Alg2Record {
        self.record
    }

    pub fn current_target(&self) -> u64 {
        alg2_nm(self.state.phase, self.state.tolerance, self.horizon as f64, self.delay)
    }

    /// Plays one phase: tops each active arm up to `n_m` in ascending arm
    /// order, then eliminates and halves the tolerance. Stops early at the
    /// horizon, in which case estimates are refreshed but nothing is eliminated.
    pub fn play_phase(&mut self, feedback: &mut dyn AnonymousFeedback) -> Result<Option<&Alg2Phase>> {
        if feedback.remaining() == 0 {
            return Ok(None);
        }
        let target = self.current_target();
        let active = self.state.active.clone();
        let mut blocks = Vec::new();
        for &arm in &active {
            let start = feedback.time();
            let mut len = 0;
            while self.state.count(arm) < target && feedback.remaining() > 0 {
                let t = feedback.time();
                let x = feedback.pull(arm)?;
                self.state.plays[arm].push(t);
                self.state.sums[arm] += x;
                len += 1;
            }
            if len > 0 {
                blocks.push(Block { arm, start, len });
            }
        }
        let mut arms = Vec::with_capacity(active.len());
        for &arm in &active {
            let n = self.state.count(arm);
            if n > 0 {
                self.state.estimates[arm] = self.state.sums[arm] / n as f64;
            }
            arms.push((arm, n, self.state.estimates[arm]));
        }
        let filled = active.iter().all(|&a| self.state.count(a) >= target);
        let survivors = if filled {
            let next = alg2_eliminate(&active, &self.state.estimates, self.state.tolerance);
            self.state.active = next.clone();
            Some(next)
        } else {
            None
        };
        self.record.phases.push(Alg2Phase {
            phase: self.state.phase,
            tolerance: self.state.tolerance,
            target,
            active,
            blocks,
            arms,
            survivors,
        });
        if filled {
            self.state.tolerance /= 2.0;
            self.state.phase += 1;
        }
        Ok(self.record.phases.last())
    }

    pub fn run(&mut self, feedback: &mut dyn AnonymousFeedback) -> Result<()> {
        while self.play_phase(feedback)?.is_some() {}
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_closed_forms() {
        let e = std::f64::consts::E;
        assert_eq!(alg2_nm(1, 1.0, e, 1), 2);
        assert_eq!(alg2_nm(1, 1.0, e, 3), 8);
        // log(2) < 1, so the clamp applies
        assert_eq!(alg2_nm(1, 1.0, 2.0, 3), 8);
        assert_eq!(alg2_nm(1, 1.0, 3.0, 1), (2.0 * 3f64.ln()).ceil() as u64);
    }

    #[test]
    fn no_delay_collapses() {
        for (tol, horizon) in [(1.0, 10_000usize), (0.5, 1000), (0.125, 50), (0.01, 1_000_000)] {
            let l = (horizon as f64 * tol * tol).ln().max(1.0);
            for m in 1..6 {
                assert_eq!(alg2_nm(m, tol, horizon as f64, 1), (2.0 * l / (tol * tol)).ceil() as u64);
            }
        }
    }

    #[test]
    fn schedule_is_monotone() {
        for d in [1, 5, 50] {
            let s = alg2_schedule(1.0, 1_000_000, d, 30);
            assert!(s.windows(2).all(|w| w[0] <= w[1]), "d={d}: {s:?}");
        }
    }

    #[test]
    fn elimination_is_strict() {
        let est = [0.9, 0.3];
        assert_eq!(alg2_eliminate(&[0, 1], &est, 0.5), vec![0]);
        let est = [0.9, 0.4];
        assert_eq!(alg2_eliminate(&[0, 1], &est, 0.5), vec![0, 1]);
        assert_eq!(alg2_eliminate(&[1], &[0.0, 0.2], 0.01), vec![1]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(ArmElimination::new(2, 10, 1, 0.0).is_err());
        assert!(ArmElimination::new(2, 10, 1, f64::NAN).is_err());
    }
}
