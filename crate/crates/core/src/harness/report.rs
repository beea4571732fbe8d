use serde::Serialize;

use crate::consistency::{Outcome, Verdict};
use crate::stats::median;

/// A check summarized over replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateVerdict {
    pub name: String,
    pub outcome: Outcome,
    pub passes: usize,
    pub fails: usize,
    pub skipped: usize,
    pub diagnostics: usize,
    /// `passes / (passes + fails)`.
    pub pass_fraction: f64,
    pub required_fraction: f64,
    pub median_observed: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl AggregateVerdict {
    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

/// Minimum number of passes out of `judged` for a required fraction.
pub fn required_passes(judged: usize, fraction: f64) -> usize {
    ((fraction * judged as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Combines per-replication verdicts of one check.
pub fn aggregate(name: &str, verdicts: &[&Verdict], required_fraction: f64) -> AggregateVerdict {
    let count = |o: Outcome| verdicts.iter().filter(|v| v.outcome == o).count();
    let (passes, fails) = (count(Outcome::Pass), count(Outcome::Fail));
    let (skipped, diagnostics) = (count(Outcome::Skipped), count(Outcome::Diagnostic));
    let judged = passes + fails;
    let outcome = if judged == 0 {
        if diagnostics > 0 {
            Outcome::Diagnostic
        } else {
            Outcome::Skipped
        }
    } else if passes >= required_passes(judged, required_fraction) {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    let observed: Vec<f64> = verdicts.iter().map(|v| v.observed).collect();
    let predicted: Vec<f64> = verdicts.iter().map(|v| v.predicted).collect();
    let tolerance: Vec<f64> = verdicts.iter().map(|v| v.tolerance).collect();
    AggregateVerdict {
        name: name.to_string(),
        outcome,
        passes,
        fails,
        skipped,
        diagnostics,
        pass_fraction: if judged == 0 { f64::NAN } else { passes as f64 / judged as f64 },
        required_fraction,
        median_observed: median(&observed),
        predicted: median(&predicted),
        tolerance: median(&tolerance),
        detail: verdicts.iter().find(|v| !v.detail.is_empty()).map(|v| v.detail.clone()).unwrap_or_default(),
    }
}

/// A single statistic judged once, e.g. a median over replications.
pub fn single(verdict: Verdict) -> AggregateVerdict {
    aggregate(&verdict.name.clone(), &[&verdict], 1.0)
}
