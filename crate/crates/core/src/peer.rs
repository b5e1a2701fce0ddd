//! Generative model of a single IDS answering a consultation.
//!
//! A peer with expertise `l` facing a scenario of difficulty `d` draws a confidence
//! `p̄ ~ Beta(ᾱ, β̄)` with
//!
//! ```text
//! ᾱ = 1 + k·r,  β̄ = 1 + k·(1 − r),  k = l(1 − d) / (d(1 − l))
//! ```
//!
//! and raises an alarm iff `p̄ > τ_p`. Its true rates are Beta tail probabilities,
//! which the harness uses as ground truth.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::beta_reg;

use crate::decision::{Feedback, PeerProfile};
use crate::error::{Error, Result};
use crate::PeerId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerModel {
    pub id: PeerId,
    expertise: f64,
    threshold: f64,
}

impl PeerModel {
    pub fn new(id: PeerId, expertise: f64, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&expertise) {
            return Err(Error::InvalidArgument(format!(
                "expertise must lie in [0, 1], got {expertise}"
            )));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(Self {
            id,
            expertise,
            threshold,
        })
    }

    pub fn expertise(&self) -> f64 {
        self.expertise
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub difficulty: f64,
    pub intrusion: bool,
}

impl Scenario {
    pub fn new(difficulty: f64, intrusion: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&difficulty) {
            return Err(Error::InvalidArgument(format!(
                "difficulty must lie in [0, 1], got {difficulty}"
            )));
        }
        Ok(Self { difficulty, intrusion })
    }
}

/// `(ᾱ, β̄)`, or [`Error::DeterministicLimit`] when `l = 1` or `d = 0`.
pub fn shape_params(model: &PeerModel, scenario: &Scenario) -> Result<(f64, f64)> {
    let (l, d) = (model.expertise, scenario.difficulty);
    if l >= 1.0 || d <= 0.0 {
        return Err(Error::DeterministicLimit);
    }
    let k = l * (1.0 - d) / (d * (1.0 - l));
    let r = if scenario.intrusion { 1.0 } else { 0.0 };
    Ok((1.0 + k * r, 1.0 + k * (1.0 - r)))
}

/// Alarm iff `p̄ > τ_p`.
pub fn feedback(assessment: f64, threshold: f64) -> Feedback {
    Feedback::from(assessment > threshold)
}

/// One confidence draw. In the deterministic limit the ground truth is returned.
pub fn sample_assessment<R: Rng + ?Sized>(model: &PeerModel, scenario: &Scenario, rng: &mut R) -> f64 {
    match shape_params(model, scenario) {
        Ok((a, b)) => Beta::new(a, b).expect("shapes are >= 1").sample(rng),
        Err(_) => truth_value(scenario.intrusion),
    }
}

fn truth_value(intrusion: bool) -> f64 {
    if intrusion {
        1.0
    } else {
        0.0
    }
}

/// Exact rates of the generative model: `p = 1 − I_τ(ᾱ, β̄)` for each class.
pub fn analytic_rates(model: &PeerModel, difficulty: f64) -> Result<PeerProfile> {
    let tail = |intrusion: bool| -> Result<f64> {
        let scenario = Scenario::new(difficulty, intrusion)?;
        Ok(match shape_params(model, &scenario) {
            Ok((a, b)) => beta_tail(model.threshold, a, b),
            Err(Error::DeterministicLimit) => feedback(truth_value(intrusion), model.threshold).as_f64(),
            Err(e) => return Err(e),
        })
    };
    Ok(PeerProfile::new(tail(false)?, tail(true)?))
}

/// `P(X > x)` for `X ~ Beta(a, b)`.
fn beta_tail(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        // I_x(a, b) = 1 − I_{1−x}(b, a); evaluate the smaller tail directly
        beta_reg(b, a, 1.0 - x)
    }
}

/// Cached Beta laws for one peer at a fixed difficulty.
#[derive(Debug, Clone, Copy)]
pub struct AssessmentSampler {
    model: PeerModel,
    under_h0: Option<Beta<f64>>,
    under_h1: Option<Beta<f64>>,
}

impl AssessmentSampler {
    pub fn new(model: PeerModel, difficulty: f64) -> Result<Self> {
        let law = |intrusion| -> Result<Option<Beta<f64>>> {
            match shape_params(&model, &Scenario::new(difficulty, intrusion)?) {
                Ok((a, b)) => Ok(Some(Beta::new(a, b).expect("shapes are >= 1"))),
                Err(Error::DeterministicLimit) => Ok(None),
                Err(e) => Err(e),
            }
        };
        Ok(Self {
            model,
            under_h0: law(false)?,
            under_h1: law(true)?,
        })
    }

    pub fn model(&self) -> &PeerModel {
        &self.model
    }

    pub fn assess<R: Rng + ?Sized>(&self, intrusion: bool, rng: &mut R) -> f64 {
        let law = if intrusion { &self.under_h1 } else { &self.under_h0 };
        match law {
            Some(beta) => beta.sample(rng),
            None => truth_value(intrusion),
        }
    }

    pub fn respond<R: Rng + ?Sized>(&self, intrusion: bool, rng: &mut R) -> Feedback {
        feedback(self.assess(intrusion, rng), self.model.threshold)
    }
}
