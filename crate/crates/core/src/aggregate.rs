//! Fixed-sample baseline aggregators and decision cost accounting.

use crate::decision::{CostMatrix, Feedback, Hypothesis, PeerProfile};
use crate::error::{Error, Result};

/// Thresholds of the two baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorConfig {
    pub tau_sa: f64,
    pub tau_wa: f64,
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        Self {
            tau_sa: 0.5,
            tau_wa: 0.5,
        }
    }
}

/// Alarm iff the mean feedback strictly exceeds `tau_sa`.
pub fn simple_average(feedbacks: &[Feedback], tau_sa: f64) -> Result<Hypothesis> {
    if feedbacks.is_empty() {
        return Err(Error::InvalidArgument(
            "simple average needs at least one feedback".into(),
        ));
    }
    let alarms = feedbacks.iter().map(|y| y.as_f64()).sum::<f64>();
    Ok(Hypothesis::from(alarms / feedbacks.len() as f64 > tau_sa))
}

/// Alarm iff `Σ w·y / Σ w` strictly exceeds `tau_wa`.
pub fn weighted_average(feedbacks: &[Feedback], weights: &[f64], tau_wa: f64) -> Result<Hypothesis> {
    if feedbacks.len() != weights.len() {
        return Err(Error::LengthMismatch {
            feedbacks: feedbacks.len(),
            profiles: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    let score: f64 = feedbacks.iter().zip(weights).map(|(y, w)| w * y.as_f64()).sum();
    Ok(Hypothesis::from(score / total > tau_wa))
}

/// Expected balanced accuracy `(p_D + 1 − p_F) / 2`.
pub fn trust_weight(profile: &PeerProfile) -> f64 {
    (profile.p_detection() + 1.0 - profile.p_false_alarm()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    TruePositive,
    TrueNegative,
    FalsePositive,
    FalseNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionOutcome {
    pub decision: Hypothesis,
    pub intrusion: bool,
    pub category: Category,
}

pub fn classify(decision: Hypothesis, intrusion: bool) -> DecisionOutcome {
    let category = match (decision, intrusion) {
        (Hypothesis::H1, true) => Category::TruePositive,
        (Hypothesis::H0, false) => Category::TrueNegative,
        (Hypothesis::H1, false) => Category::FalsePositive,
        (Hypothesis::H0, true) => Category::FalseNegative,
    };
    DecisionOutcome {
        decision,
        intrusion,
        category,
    }
}

impl DecisionOutcome {
    pub fn cost(&self, costs: &CostMatrix) -> f64 {
        costs.cost(self.decision, Hypothesis::from(self.intrusion))
    }
}

/// Mean per-decision cost.
pub fn average_cost(outcomes: &[DecisionOutcome], costs: &CostMatrix) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("no outcomes to average".into()));
    }
    Ok(outcomes.iter().map(|o| o.cost(costs)).sum::<f64>() / outcomes.len() as f64)
}
