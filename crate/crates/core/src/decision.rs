//! Fixed-sample Bayesian binary hypothesis testing over independent peer feedback.
//!
//! Feedback from distinct peers is treated as conditionally independent given the
//! hypothesis, so the joint likelihood ratio factors into per-peer terms. All
//! products are accumulated in log space.

use std::fmt;

use crate::error::{check_probability, Error, Result};

/// Lower clamp bound for peer rates. Keeps every likelihood-ratio term finite.
pub const RATE_EPSILON: f64 = 1e-6;

/// `H0`: no intrusion. `H1`: intrusion, raise an alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn is_alarm(self) -> bool {
        self == Hypothesis::H1
    }
}

impl From<bool> for Hypothesis {
    fn from(alarm: bool) -> Self {
        if alarm {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::H0 => f.write_str("H0"),
            Hypothesis::H1 => f.write_str("H1"),
        }
    }
}

/// A peer's binary diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Feedback {
    Clear = 0,
    Alarm = 1,
}

impl Feedback {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }
}

impl From<bool> for Feedback {
    fn from(alarm: bool) -> Self {
        if alarm {
            Feedback::Alarm
        } else {
            Feedback::Clear
        }
    }
}

impl TryFrom<u8> for Feedback {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Feedback::Clear),
            1 => Ok(Feedback::Alarm),
            other => Err(Error::InvalidArgument(format!("feedback must be 0 or 1, got {other}"))),
        }
    }
}

/// False-alarm and detection rates of one peer, clamped to `[ε, 1 − ε]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerProfile {
    p_f: f64,
    p_d: f64,
}

impl PeerProfile {
    /// Clamps both rates into `[RATE_EPSILON, 1 - RATE_EPSILON]`.
    ///
    /// Panics if either rate is NaN.
    pub fn new(p_false_alarm: f64, p_detection: f64) -> Self {
        assert!(
            !p_false_alarm.is_nan() && !p_detection.is_nan(),
            "peer rates must not be NaN"
        );
        let clamp = |p: f64| p.clamp(RATE_EPSILON, 1.0 - RATE_EPSILON);
        Self {
            p_f: clamp(p_false_alarm),
            p_d: clamp(p_detection),
        }
    }

    /// The profile of a peer whose answers carry no information.
    pub fn uninformative() -> Self {
        Self::new(0.5, 0.5)
    }

    /// `p(y = 1 | H0)`.
    pub fn p_false_alarm(&self) -> f64 {
        self.p_f
    }

    /// `p(y = 1 | H1)`.
    pub fn p_detection(&self) -> f64 {
        self.p_d
    }

    /// `p(y = 0 | H1)`.
    pub fn p_miss(&self) -> f64 {
        1.0 - self.p_d
    }

    /// Probability of observing `feedback` under hypothesis `h`.
    pub fn likelihood(&self, feedback: Feedback, h: Hypothesis) -> f64 {
        let p_alarm = match h {
            Hypothesis::H0 => self.p_f,
            Hypothesis::H1 => self.p_d,
        };
        match feedback {
            Feedback::Alarm => p_alarm,
            Feedback::Clear => 1.0 - p_alarm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    pi0: f64,
    pi1: f64,
}

impl Priors {
    /// Builds priors from the probability of no intrusion.
    pub fn new(pi0: f64) -> Result<Self> {
        check_probability("pi0", pi0)?;
        Ok(Self { pi0, pi1: 1.0 - pi0 })
    }

    pub fn from_pair(pi0: f64, pi1: f64) -> Result<Self> {
        check_probability("pi0", pi0)?;
        check_probability("pi1", pi1)?;
        if (pi0 + pi1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "priors must sum to 1, got {pi0} + {pi1}"
            )));
        }
        Ok(Self { pi0, pi1 })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }
}

impl Default for Priors {
    fn default() -> Self {
        Self { pi0: 0.5, pi1: 0.5 }
    }
}

/// `c_ll'` is the cost of deciding `H_l` while `H_l'` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMatrix {
    pub c00: f64,
    pub c01: f64,
    pub c10: f64,
    pub c11: f64,
}

impl CostMatrix {
    pub fn new(c00: f64, c01: f64, c10: f64, c11: f64) -> Result<Self> {
        let costs = Self { c00, c01, c10, c11 };
        costs.validate()?;
        Ok(costs)
    }

    /// Zero cost for correct decisions, `false_alarm` per FP and `miss` per FN.
    pub fn errors_only(false_alarm: f64, miss: f64) -> Result<Self> {
        Self::new(0.0, miss, false_alarm, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c00, self.c01, self.c10, self.c11];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "costs must be finite and nonnegative: {self:?}"
            )));
        }
        if self.c10 <= self.c00 || self.c01 <= self.c11 {
            return Err(Error::InvalidArgument(
                "errors must cost more than correct decisions (c10 > c00, c01 > c11)".into(),
            ));
        }
        Ok(())
    }

    /// Cost of deciding `decision` when `truth` holds.
    pub fn cost(&self, decision: Hypothesis, truth: Hypothesis) -> f64 {
        match (decision, truth) {
            (Hypothesis::H0, Hypothesis::H0) => self.c00,
            (Hypothesis::H0, Hypothesis::H1) => self.c01,
            (Hypothesis::H1, Hypothesis::H0) => self.c10,
            (Hypothesis::H1, Hypothesis::H1) => self.c11,
        }
    }
}

impl Default for CostMatrix {
    fn default() -> Self {
        Self {
            c00: 0.0,
            c01: 1.0,
            c10: 1.0,
            c11: 0.0,
        }
    }
}

/// `ln(p(y | H1) / p(y | H0))` for one peer.
pub fn log_likelihood_ratio_term(feedback: Feedback, profile: &PeerProfile) -> f64 {
    profile.likelihood(feedback, Hypothesis::H1).ln() - profile.likelihood(feedback, Hypothesis::H0).ln()
}

pub fn likelihood_ratio_term(feedback: Feedback, profile: &PeerProfile) -> f64 {
    profile.likelihood(feedback, Hypothesis::H1) / profile.likelihood(feedback, Hypothesis::H0)
}

pub fn log_likelihood_ratio(feedbacks: &[Feedback], profiles: &[PeerProfile]) -> Result<f64> {
    if feedbacks.len() != profiles.len() {
        return Err(Error::LengthMismatch {
            feedbacks: feedbacks.len(),
            profiles: profiles.len(),
        });
    }
    Ok(feedbacks
        .iter()
        .zip(profiles)
        .map(|(&y, p)| log_likelihood_ratio_term(y, p))
        .sum())
}

/// Joint likelihood ratio of independent feedback. The empty product is 1.
pub fn likelihood_ratio(feedbacks: &[Feedback], profiles: &[PeerProfile]) -> Result<f64> {
    log_likelihood_ratio(feedbacks, profiles).map(f64::exp)
}

/// Bayes threshold `τ = (c10 − c00)·π0 / ((c01 − c11)·π1)`.
pub fn bayes_threshold(costs: &CostMatrix, priors: &Priors) -> Result<f64> {
    costs.validate()?;
    if priors.pi1() <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    Ok((costs.c10 - costs.c00) * priors.pi0() / ((costs.c01 - costs.c11) * priors.pi1()))
}

/// Alarm iff `ratio >= tau`.
pub fn bayes_decide(ratio: f64, tau: f64) -> Hypothesis {
    Hypothesis::from(ratio >= tau)
}

/// Maximum-likelihood rule: the Bayes rule at `τ = 1`.
pub fn ml_decide(feedbacks: &[Feedback], profiles: &[PeerProfile]) -> Result<Hypothesis> {
    let log_ratio = log_likelihood_ratio(feedbacks, profiles)?;
    Ok(Hypothesis::from(log_ratio >= 0.0))
}
