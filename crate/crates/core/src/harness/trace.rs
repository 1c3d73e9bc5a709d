use std::io::{self, Write};

use serde::Serialize;

pub const TRACE_HEADER: &str = "t,rep,arm,x,cum_reward,cum_pseudo_regret";

/// One recorded step of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub rep: usize,
    pub arm: usize,
    pub x: f64,
    pub cum_reward: f64,
    pub cum_pseudo_regret: f64,
}

/// Thinned per-step record of one replication.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
}

impl RegretTrace {
    /// Builds the trace of a run from its actions and observations, keeping
    /// every `stride`-th step and the final one. Cumulative columns are exact
    /// regardless of the stride.
    pub fn from_run(rep: usize, arms: &[usize], observations: &[f64], gaps: &[f64], stride: usize) -> Self {
        assert_eq!(arms.len(), observations.len());
        let stride = stride.max(1);
        let regret = compute_pseudo_regret(arms, gaps);
        let last = arms.len().saturating_sub(1);
        let mut cum_reward = 0.0;
        let mut rows = Vec::with_capacity(arms.len() / stride + 2);
        for t in 0..arms.len() {
            cum_reward += observations[t];
            if t % stride == 0 || t == last {
                rows.push(TraceRow {
                    t,
                    rep,
                    arm: arms[t],
                    x: observations[t],
                    cum_reward,
                    cum_pseudo_regret: regret[t],
                });
            }
        }
        Self { rows }
    }

    pub fn final_pseudo_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_pseudo_regret)
    }

    pub fn write_rows<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t,
                r.rep,
                r.arm,
                format_sig(r.x, 12),
                format_sig(r.cum_reward, 12),
                format_sig(r.cum_pseudo_regret, 12)
            )?;
        }
        Ok(())
    }
}

/// Cumulative pseudo-regret after each step: `Σ_i Δ_i · T_i(t)`.
///
/// Evaluated from pull counts rather than by summing gaps, so the final entry
/// equals `Σ_i Δ_i · T_i(end)` exactly and the sequence is non-decreasing.
pub fn compute_pseudo_regret(arms: &[usize], gaps: &[f64]) -> Vec<f64> {
    let mut counts = vec![0u64; gaps.len()];
    let mut out = Vec::with_capacity(arms.len());
    for &a in arms {
        counts[a] += 1;
        out.push(weighted_pulls(&counts, gaps));
    }
    out
}

/// `Σ_i gaps[i] · counts[i]`, summed in arm order.
pub fn weighted_pulls(counts: &[u64], gaps: &[f64]) -> f64 {
    counts.iter().zip(gaps).map(|(&c, &g)| g * c as f64).fold(0.0, |acc, v| acc + v)
}

/// Formats `x` with `digits` significant digits, like C's `%.{digits}g`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
