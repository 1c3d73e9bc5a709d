use crate::error::{Error, Result};

/// Append-only ground-truth record of a run, indexed by time from 0.
///
/// Holds what the learner never sees: which pull produced which total and how
/// that total was split. Verification compares it against the observations.
#[derive(Clone, Debug, Default)]
pub struct RewardLedger {
    span: usize,
    arms: Vec<u32>,
    totals: Vec<f64>,
    components: Vec<f64>,
    observed: Vec<f64>,
}

impl RewardLedger {
    pub fn new(span: usize) -> Self {
        Self {
            span,
            ..Self::default()
        }
    }

    pub fn with_capacity(span: usize, steps: usize) -> Self {
        Self {
            span,
            arms: Vec::with_capacity(steps),
            totals: Vec::with_capacity(steps),
            components: Vec::with_capacity(steps * span),
            observed: Vec::with_capacity(steps),
        }
    }

    pub(crate) fn record(&mut self, arm: usize, total: f64, components: &[f64], observed: f64) {
        assert_eq!(components.len(), self.span);
        self.arms.push(arm as u32);
        self.totals.push(total);
        self.components.extend_from_slice(components);
        self.observed.push(observed);
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arm(&self, t: usize) -> usize {
        self.arms[t] as usize
    }

    /// Realized total reward of the pull at `t`.
    pub fn total(&self, t: usize) -> f64 {
        self.totals[t]
    }

    pub fn components(&self, t: usize) -> &[f64] {
        &self.components[t * self.span..(t + 1) * self.span]
    }

    /// Aggregate delivered at `t`, bit-identical to what the learner saw.
    pub fn observed(&self, t: usize) -> f64 {
        self.observed[t]
    }

    pub fn observations(&self) -> &[f64] {
        &self.observed
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    fn check_times(&self, times: &[usize]) -> Result<()> {
        if times.is_empty() {
            return Err(Error::UndefinedEstimate);
        }
        if let Some(&t) = times.iter().find(|&&t| t >= self.len()) {
            return Err(Error::VerificationUnavailable(format!(
                "time {t} is not in the ledger (length {})",
                self.len()
            )));
        }
        Ok(())
    }

    /// Mean of the true totals over `times`.
    pub fn true_mean_estimate(&self, times: &[usize]) -> Result<f64> {
        self.check_times(times)?;
        let sum: f64 = times.iter().map(|&t| self.totals[t]).sum();
        Ok(sum / times.len() as f64)
    }

    /// Mean of the delivered aggregates over `times`, summed in the given order.
    pub fn observed_mean(&self, times: &[usize]) -> Result<f64> {
        self.check_times(times)?;
        let sum: f64 = times.iter().map(|&t| self.observed[t]).sum();
        Ok(sum / times.len() as f64)
    }

    /// Recomputes the aggregate due at `t` from the recorded components,
    /// oldest pull first.
    pub fn reconstruct_observation(&self, t: usize) -> f64 {
        let mut x = 0.0;
        for lag in (0..self.span).rev() {
            if lag <= t {
                x += self.components(t - lag)[lag];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger() -> RewardLedger {
        let mut l = RewardLedger::new(1);
        l.record(0, 1.0, &[1.0], 1.0);
        l.record(0, 0.0, &[0.0], 0.0);
        l.record(1, 0.7, &[0.7], 0.7);
        l
    }

    #[test]
    fn true_means() {
        let l = ledger();
        assert_eq!(l.true_mean_estimate(&[2]).unwrap(), 0.7);
        assert_eq!(l.true_mean_estimate(&[0, 1]).unwrap(), 0.5);
        assert!(matches!(l.true_mean_estimate(&[]), Err(Error::UndefinedEstimate)));
        assert!(l.true_mean_estimate(&[3]).is_err());
    }
}
