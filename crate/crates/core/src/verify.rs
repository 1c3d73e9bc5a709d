//! Checks that tie a run back to the ground-truth ledger.
//!
//! The learner's estimates are means of anonymous aggregates; the ledger knows
//! the true per-pull totals. Over a block of consecutive pulls of one arm the
//! two sums differ only by mass leaking in from earlier pulls and out past the
//! block's end, so the estimator gap is bounded deterministically:
//! `d / k` for phased UCB and `m(d−1) / n_m` for phase-based elimination.

use serde::Serialize;

use crate::env::{Instance, RewardLedger};
use crate::error::{Error, Result};
use crate::policies::{Alg1Record, Alg2Record};

/// Floating-point slack on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// Minimum replications for the expected pull-count check.
pub const MIN_PULL_COUNT_REPLICATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaRecord {
    pub phase: usize,
    pub arm: usize,
    pub pulls: u64,
    /// Mean of observed aggregates over the arm's play times.
    pub observed_estimate: f64,
    /// Mean of true totals over the same times.
    pub ledger_estimate: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Horizon-truncated; reported but not asserted.
    pub exempt: bool,
}

impl LemmaRecord {
    fn new(phase: usize, arm: usize, pulls: u64, observed: f64, truth: f64, bound: f64, exempt: bool) -> Self {
        Self {
            phase,
            arm,
            pulls,
            observed_estimate: observed,
            ledger_estimate: truth,
            bound,
            satisfied: (observed - truth).abs() <= bound + BOUND_SLACK,
            exempt,
        }
    }

    pub fn error(&self) -> f64 {
        (self.observed_estimate - self.ledger_estimate).abs()
    }

    /// `error / bound`; 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        let err = self.error();
        if err == 0.0 {
            0.0
        } else {
            err / self.bound
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub records: Vec<LemmaRecord>,
}

impl LemmaReport {
    fn asserted(&self) -> impl Iterator<Item = &LemmaRecord> {
        self.records.iter().filter(|r| !r.exempt)
    }

    pub fn phases_checked(&self) -> usize {
        self.asserted().count()
    }

    pub fn exemptions(&self) -> usize {
        self.records.len() - self.phases_checked()
    }

    pub fn violations(&self) -> usize {
        self.asserted().filter(|r| !r.satisfied).count()
    }

    pub fn max_ratio(&self) -> f64 {
        self.asserted().map(LemmaRecord::ratio).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn summary(&self) -> LemmaSummary {
        LemmaSummary {
            runs: 1,
            phases_checked: self.phases_checked(),
            violations: self.violations(),
            exemptions: self.exemptions(),
            max_ratio: self.max_ratio(),
        }
    }
}

/// Aggregate of lemma reports over replications.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub runs: usize,
    pub phases_checked: usize,
    pub violations: usize,
    pub exemptions: usize,
    pub max_ratio: f64,
}

impl LemmaSummary {
    pub fn merge(self, other: LemmaSummary) -> LemmaSummary {
        LemmaSummary {
            runs: self.runs + other.runs,
            phases_checked: self.phases_checked + other.phases_checked,
            violations: self.violations + other.violations,
            exemptions: self.exemptions + other.exemptions,
            max_ratio: self.max_ratio.max(other.max_ratio),
        }
    }
}

fn require(ledger: Option<&RewardLedger>) -> Result<&RewardLedger> {
    ledger.ok_or_else(|| Error::VerificationUnavailable("run has no ledger".into()))
}

/// Running sums over one arm's play times, accumulated oldest first so they
/// reproduce the learner's own summation order bit for bit.
#[derive(Clone, Copy, Default)]
struct ArmSums {
    pulls: u64,
    observed: f64,
    truth: f64,
}

impl ArmSums {
    fn extend(&mut self, ledger: &RewardLedger, arm: usize, start: usize, len: usize) -> Result<()> {
        for t in start..start + len {
            if t >= ledger.len() {
                return Err(Error::VerificationUnavailable(format!("time {t} is not in the ledger")));
            }
            if ledger.arm(t) != arm {
                return Err(Error::Verification(format!(
                    "record plays arm {arm} at t = {t}, ledger has arm {}",
                    ledger.arm(t)
                )));
            }
            self.observed += ledger.observed(t);
            self.truth += ledger.total(t);
        }
        self.pulls += len as u64;
        Ok(())
    }

    fn means(&self) -> (f64, f64) {
        let n = self.pulls as f64;
        (self.observed / n, self.truth / n)
    }
}

fn consistent(phase: usize, arm: usize, recorded: f64, from_ledger: f64) -> Result<()> {
    if recorded.to_bits() == from_ledger.to_bits() {
        Ok(())
    } else {
        Err(Error::Verification(format!(
            "phase {phase}, arm {arm}: learner estimate {recorded} differs from ledger observations {from_ledger}"
        )))
    }
}

/// Checks `|μ̂_i(m) − μ̄_i(m)| ≤ d / k` for every phase of a phased UCB run.
/// Horizon-truncated phases are reported as exempt.
pub fn check_lemma1(record: &Alg1Record, ledger: Option<&RewardLedger>) -> Result<LemmaReport> {
    let ledger = require(ledger)?;
    let bound = ledger.span() as f64 / record.k as f64;
    let num_arms = record.phases.iter().map(|p| p.arm + 1).max().unwrap_or(0);
    let mut sums = vec![ArmSums::default(); num_arms];
    let mut report = LemmaReport::default();
    for phase in &record.phases {
        let s = &mut sums[phase.arm];
        s.extend(ledger, phase.arm, phase.start, phase.len)?;
        let (observed, truth) = s.means();
        consistent(phase.phase, phase.arm, phase.estimate, observed)?;
        report.records.push(LemmaRecord::new(
            phase.phase,
            phase.arm,
            s.pulls,
            observed,
            truth,
            bound,
            !record.is_complete(phase),
        ));
    }
    Ok(report)
}

/// Checks `|μ̃_j(m) − X_j(m)| ≤ m(d−1) / n_m` for every active arm holding
/// exactly `n_m` pulls after phase `m`. Arms cut short by the horizon are exempt.
pub fn check_lemma2(record: &Alg2Record, ledger: Option<&RewardLedger>) -> Result<LemmaReport> {
    let ledger = require(ledger)?;
    let spill = ledger.span().saturating_sub(1) as f64;
    let num_arms = record
        .phases
        .iter()
        .flat_map(|p| p.active.iter().map(|a| a + 1))
        .max()
        .unwrap_or(0);
    let mut sums = vec![ArmSums::default(); num_arms];
    let mut report = LemmaReport::default();
    for phase in &record.phases {
        for block in &phase.blocks {
            sums[block.arm].extend(ledger, block.arm, block.start, block.len)?;
        }
        let m = phase.phase as usize;
        let bound = m as f64 * spill / phase.target as f64;
        for &(arm, pulls, estimate) in &phase.arms {
            let s = &sums[arm];
            if s.pulls != pulls {
                return Err(Error::Verification(format!(
                    "phase {m}, arm {arm}: record has {pulls} pulls, blocks cover {}",
                    s.pulls
                )));
            }
            if pulls == 0 {
                continue;
            }
            let (observed, truth) = s.means();
            consistent(m, arm, estimate, observed)?;
            report.records.push(LemmaRecord::new(
                m,
                arm,
                pulls,
                observed,
                truth,
                bound,
                pulls != phase.target,
            ));
        }
    }
    Ok(report)
}

/// Expected pull-count bound for a sub-optimal arm with gap `gap`:
/// `289·log T / (4Δ²) + (d/2)·√(T / log T) + 2`.
pub fn pull_count_bound(gap: f64, horizon: usize, delay: usize) -> f64 {
    let t = horizon as f64;
    let log_t = t.ln();
    289.0 * log_t / (4.0 * gap * gap) + delay as f64 / 2.0 * (t / log_t).sqrt() + 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullCountArm {
    pub arm: usize,
    pub gap: f64,
    pub mean_pulls: f64,
    /// `None` when the arm is excluded.
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub satisfied: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullCountReport {
    pub replications: usize,
    pub arms: Vec<PullCountArm>,
}

impl PullCountReport {
    pub fn passed(&self) -> bool {
        self.arms.iter().all(|a| a.satisfied)
    }

    pub fn violations(&self) -> usize {
        self.arms.iter().filter(|a| !a.satisfied).count()
    }
}

/// Compares the mean pull count of every sub-optimal arm, over replicated
/// phased UCB runs with default parameters, against [`pull_count_bound`].
pub fn check_pull_count_bound(pull_counts: &[Vec<u64>], instance: &Instance) -> Result<PullCountReport> {
    if pull_counts.len() < MIN_PULL_COUNT_REPLICATIONS {
        return Err(Error::config(
            "replications",
            format!(
                "pull-count check needs at least {MIN_PULL_COUNT_REPLICATIONS} replications, got {}",
                pull_counts.len()
            ),
        ));
    }
    let k = instance.num_arms();
    if let Some(bad) = pull_counts.iter().find(|c| c.len() != k) {
        return Err(Error::config(
            "pull_counts",
            format!("expected {k} arms per replication, got {}", bad.len()),
        ));
    }
    let best = instance.optimal_arm();
    let gaps = instance.gaps();
    let reps = pull_counts.len() as f64;
    let mut arms = Vec::new();
    for arm in 0..k {
        if arm == best {
            continue;
        }
        let mean_pulls = pull_counts.iter().map(|c| c[arm] as f64).sum::<f64>() / reps;
        let gap = gaps[arm];
        let entry = if gap > 0.0 {
            let bound = pull_count_bound(gap, instance.horizon, instance.delay);
            PullCountArm {
                arm,
                gap,
                mean_pulls,
                bound: Some(bound),
                slack: Some(bound - mean_pulls),
                satisfied: mean_pulls <= bound,
                note: None,
            }
        } else {
            PullCountArm {
                arm,
                gap,
                mean_pulls,
                bound: None,
                slack: None,
                satisfied: true,
                note: Some("zero gap: excluded".into()),
            }
        };
        arms.push(entry);
    }
    Ok(PullCountReport {
        replications: pull_counts.len(),
        arms,
    })
}
