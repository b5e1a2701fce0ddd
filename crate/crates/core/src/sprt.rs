//! Sequential probability ratio test over peer feedback.
//!
//! A node consults acquaintances one at a time, accumulating the log-likelihood
//! ratio `ln L_n`, and stops as soon as `L_n` leaves the open interval `(a, b)`.
//! Crossing `b` raises an alarm, crossing `a` reports no intrusion. When the
//! acquaintance list runs out first, the no-feedback Bayes rule is applied to the
//! current posterior.
//!
//! Thresholds come from target error rates through Wald's approximation, and the
//! expected stopping time of the test follows from Wald's identity.

use indexmap::IndexSet;

use crate::decision::{log_likelihood_ratio_term, CostMatrix, Feedback, Hypothesis, PeerProfile};
use crate::error::{check_probability, Error, Result};
use crate::PeerId;

/// Divergence guard: a run never consumes more than this many feedbacks.
pub const MAX_STEPS: usize = 100_000;

/// Desired bounds on the aggregated false-positive rate and detection rate.
///
/// Also used to carry *achieved* rates into [`expected_sample_size`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRates {
    p_f_bar: f64,
    p_d_bar: f64,
}

impl TargetRates {
    pub fn new(p_f_bar: f64, p_d_bar: f64) -> Result<Self> {
        let open = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {p}")))
            }
        };
        open("false-positive bound", p_f_bar)?;
        open("detection bound", p_d_bar)?;
        if p_f_bar >= p_d_bar {
            return Err(Error::InvalidArgument(format!(
                "false-positive bound {p_f_bar} must be below detection bound {p_d_bar}"
            )));
        }
        Ok(Self { p_f_bar, p_d_bar })
    }

    pub fn p_false_alarm(&self) -> f64 {
        self.p_f_bar
    }

    pub fn p_detection(&self) -> f64 {
        self.p_d_bar
    }
}

impl Default for TargetRates {
    fn default() -> Self {
        Self {
            p_f_bar: 0.1,
            p_d_bar: 0.95,
        }
    }
}

/// Likelihood-ratio stopping thresholds `0 < a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtThresholds {
    a: f64,
    b: f64,
}

impl SprtThresholds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "thresholds must satisfy 0 < a < b < inf, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Wald's approximation: `a = (1 − P̄_D)/(1 − P̄_F)`, `b = P̄_D/P̄_F`.
    pub fn from_targets(targets: &TargetRates) -> Self {
        let (pf, pd) = (targets.p_f_bar, targets.p_d_bar);
        Self {
            a: (1.0 - pd) / (1.0 - pf),
            b: pd / pf,
        }
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn ln_lower(&self) -> f64 {
        self.a.ln()
    }

    pub fn ln_upper(&self) -> f64 {
        self.b.ln()
    }

    /// The same thresholds expressed on the posterior `π0(n)`: `(π_L, π_H)`.
    ///
    /// `π_L` is the posterior reached at `L_n = b`, `π_H` the one reached at `L_n = a`.
    pub fn posterior_bounds(&self, pi0: f64) -> (f64, f64) {
        (posterior_update(pi0, self.b), posterior_update(pi0, self.a))
    }
}

pub fn thresholds_from_targets(targets: &TargetRates) -> SprtThresholds {
    SprtThresholds::from_targets(targets)
}

/// Costs of the sequential problem: false alarm, missed intrusion, and one feedback request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialCosts {
    pub c_f: f64,
    pub c_m: f64,
    pub d: f64,
}

impl SequentialCosts {
    pub fn new(c_f: f64, c_m: f64, d: f64) -> Result<Self> {
        if !(c_f > 0.0 && c_m > 0.0 && d >= 0.0) || !(c_f.is_finite() && c_m.is_finite() && d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need c_f > 0, c_m > 0, d >= 0; got c_f = {c_f}, c_m = {c_m}, d = {d}"
            )));
        }
        Ok(Self { c_f, c_m, d })
    }

    /// Error costs relative to the cost of the correct decision.
    pub fn from_cost_matrix(costs: &CostMatrix, per_feedback: f64) -> Result<Self> {
        costs.validate()?;
        Self::new(costs.c10 - costs.c00, costs.c01 - costs.c11, per_feedback)
    }

    /// Posterior `π0` below which an alarm is the cheaper terminal decision.
    pub fn alarm_cutoff(&self) -> f64 {
        self.c_m / (self.c_f + self.c_m)
    }
}

/// `π0(n) = π0 / (π0 + (1 − π0)·L_n)`.
pub fn posterior_update(pi0: f64, ratio: f64) -> f64 {
    posterior_from_log_ratio(pi0, ratio.ln())
}

fn posterior_from_log_ratio(pi0: f64, log_ratio: f64) -> f64 {
    if pi0 <= 0.0 {
        return 0.0;
    }
    if pi0 >= 1.0 {
        return 1.0;
    }
    // π0 / (π0 + π1·L) = 1 / (1 + exp(ln(π1/π0) + ln L))
    let z = (1.0 - pi0).ln() - pi0.ln() + log_ratio;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Running state of one consultation.
#[derive(Debug, Clone, PartialEq)]
pub struct SprtState {
    prior: f64,
    log_ratio: f64,
    pi0_n: f64,
    consulted: IndexSet<PeerId>,
}

impl SprtState {
    pub fn new(pi0: f64) -> Result<Self> {
        check_probability("pi0", pi0)?;
        Ok(Self {
            prior: pi0,
            log_ratio: 0.0,
            pi0_n: pi0,
            consulted: IndexSet::new(),
        })
    }

    /// Number of feedbacks consumed.
    pub fn n(&self) -> usize {
        self.consulted.len()
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn log_ratio(&self) -> f64 {
        self.log_ratio
    }

    pub fn ratio(&self) -> f64 {
        self.log_ratio.exp()
    }

    /// Posterior probability of no intrusion.
    pub fn pi0_n(&self) -> f64 {
        self.pi0_n
    }

    /// Consulted peers in consultation order.
    pub fn consulted(&self) -> impl ExactSizeIterator<Item = PeerId> + '_ {
        self.consulted.iter().copied()
    }

    pub fn has_consulted(&self, peer: PeerId) -> bool {
        self.consulted.contains(&peer)
    }

    /// Consumes one feedback, returning the successor state.
    pub fn step(&self, feedback: Feedback, profile: &PeerProfile, peer: PeerId) -> Result<Self> {
        let mut next = self.clone();
        next.advance(feedback, profile, peer)?;
        Ok(next)
    }

    /// In-place form of [`SprtState::step`].
    pub fn advance(&mut self, feedback: Feedback, profile: &PeerProfile, peer: PeerId) -> Result<()> {
        if !self.consulted.insert(peer) {
            return Err(Error::DuplicatePeer(peer));
        }
        self.log_ratio += log_likelihood_ratio_term(feedback, profile);
        self.pi0_n = posterior_from_log_ratio(self.prior, self.log_ratio);
        Ok(())
    }
}

pub fn sprt_step(state: &SprtState, feedback: Feedback, profile: &PeerProfile, peer: PeerId) -> Result<SprtState> {
    state.step(feedback, profile, peer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stopping {
    Continue,
    Stop,
}

/// Continue iff `a < L_n < b`.
pub fn stopping_rule(state: &SprtState, thresholds: &SprtThresholds) -> Stopping {
    let lr = state.log_ratio;
    if thresholds.ln_lower() < lr && lr < thresholds.ln_upper() {
        Stopping::Continue
    } else {
        Stopping::Stop
    }
}

/// Alarm at or above `b`, clear at or below `a`; in between (list exhausted) the
/// posterior is compared against `c_m / (c_f + c_m)`.
pub fn terminal_decision(state: &SprtState, thresholds: &SprtThresholds, costs: &SequentialCosts) -> Hypothesis {
    let lr = state.log_ratio;
    if lr >= thresholds.ln_upper() {
        Hypothesis::H1
    } else if lr <= thresholds.ln_lower() {
        Hypothesis::H0
    } else {
        no_feedback_decision(state.pi0_n, costs)
    }
}

/// The zero-sample Bayes decision at posterior `pi0`.
pub fn no_feedback_decision(pi0: f64, costs: &SequentialCosts) -> Hypothesis {
    Hypothesis::from(pi0 < costs.alarm_cutoff())
}

/// Minimum Bayes risk without further feedback: `c_f·π0` below the cutoff, `c_m·(1 − π0)` otherwise.
pub fn terminal_risk(pi0: f64, costs: &SequentialCosts) -> f64 {
    if pi0 < costs.alarm_cutoff() {
        costs.c_f * pi0
    } else {
        costs.c_m * (1.0 - pi0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprtOutcome {
    pub decision: Hypothesis,
    /// Stopping time: feedbacks consumed.
    pub consulted: usize,
    /// True when the run ended because no acquaintance was left.
    pub exhausted: bool,
    /// State before the first consultation followed by the state after each one.
    pub trace: Vec<SprtState>,
}

/// Stopping rule, terminal rule and prior for repeated runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialTest {
    pub thresholds: SprtThresholds,
    pub costs: SequentialCosts,
    pub pi0: f64,
}

impl SequentialTest {
    pub fn new(thresholds: SprtThresholds, costs: SequentialCosts, pi0: f64) -> Result<Self> {
        check_probability("pi0", pi0)?;
        Ok(Self { thresholds, costs, pi0 })
    }

    /// Runs the test over `acquaintances` in order and records the full trace.
    pub fn run<I, F>(&self, acquaintances: I, feedback_source: F) -> Result<SprtOutcome>
    where
        I: IntoIterator<Item = (PeerId, PeerProfile)>,
        F: FnMut(PeerId) -> Feedback,
    {
        let mut trace = Vec::new();
        let (decision, state, exhausted) = self.drive(acquaintances, feedback_source, usize::MAX, Some(&mut trace))?;
        Ok(SprtOutcome {
            decision,
            consulted: state.n(),
            exhausted,
            trace,
        })
    }

    /// Like [`SequentialTest::run`] without the trace: `(decision, stopping time)`.
    pub fn decide<I, F>(&self, acquaintances: I, feedback_source: F) -> Result<(Hypothesis, usize)>
    where
        I: IntoIterator<Item = (PeerId, PeerProfile)>,
        F: FnMut(PeerId) -> Feedback,
    {
        let (decision, state, _) = self.drive(acquaintances, feedback_source, usize::MAX, None)?;
        Ok((decision, state.n()))
    }

    /// Consults exactly `min(n, list length)` peers without early stopping, then
    /// applies the terminal rule.
    pub fn decide_after<I, F>(&self, acquaintances: I, mut feedback_source: F, n: usize) -> Result<(Hypothesis, usize)>
    where
        I: IntoIterator<Item = (PeerId, PeerProfile)>,
        F: FnMut(PeerId) -> Feedback,
    {
        let mut state = SprtState::new(self.pi0)?;
        for (peer, profile) in acquaintances.into_iter().take(n.min(MAX_STEPS)) {
            let y = feedback_source(peer);
            state.advance(y, &profile, peer)?;
        }
        Ok((terminal_decision(&state, &self.thresholds, &self.costs), state.n()))
    }

    fn drive<I, F>(
        &self,
        acquaintances: I,
        mut feedback_source: F,
        cap: usize,
        mut trace: Option<&mut Vec<SprtState>>,
    ) -> Result<(Hypothesis, SprtState, bool)>
    where
        I: IntoIterator<Item = (PeerId, PeerProfile)>,
        F: FnMut(PeerId) -> Feedback,
    {
        let cap = cap.min(MAX_STEPS);
        let mut state = SprtState::new(self.pi0)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(state.clone());
        }
        let mut peers = acquaintances.into_iter();
        let mut exhausted = true;
        while state.n() < cap {
            if stopping_rule(&state, &self.thresholds) == Stopping::Stop {
                exhausted = false;
                break;
            }
            let Some((peer, profile)) = peers.next() else { break };
            let y = feedback_source(peer);
            state.advance(y, &profile, peer)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(state.clone());
            }
        }
        if exhausted && stopping_rule(&state, &self.thresholds) == Stopping::Stop {
            exhausted = false;
        }
        Ok((
            terminal_decision(&state, &self.thresholds, &self.costs),
            state,
            exhausted,
        ))
    }
}

/// Runs the sequential test once. See [`SequentialTest::run`].
pub fn run_sprt<I, F>(
    acquaintances: I,
    feedback_source: F,
    thresholds: &SprtThresholds,
    costs: &SequentialCosts,
    pi0: f64,
) -> Result<SprtOutcome>
where
    I: IntoIterator<Item = (PeerId, PeerProfile)>,
    F: FnMut(PeerId) -> Feedback,
{
    SequentialTest::new(*thresholds, *costs, pi0)?.run(acquaintances, feedback_source)
}

/// I.i.d. peers with `θ0 = p(y = 0 | H0)` and `θ1 = p(y = 0 | H1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricPeerPopulation {
    pub theta0: f64,
    pub theta1: f64,
}

impl SymmetricPeerPopulation {
    pub fn new(theta0: f64, theta1: f64) -> Result<Self> {
        for (name, t) in [("theta0", theta0), ("theta1", theta1)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {t}")));
            }
        }
        Ok(Self { theta0, theta1 })
    }

    pub fn from_profile(profile: &PeerProfile) -> Self {
        Self {
            theta0: 1.0 - profile.p_false_alarm(),
            theta1: profile.p_miss(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    /// `D(p̄0 ‖ p̄1)`: drift of `−ln L` per feedback under H0.
    NullToAlternative,
    /// `D(p̄1 ‖ p̄0)`: drift of `ln L` per feedback under H1.
    AlternativeToNull,
}

/// KL divergence between Bernoulli laws given as probabilities of answering 0.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

pub fn kl_divergence(pop: &SymmetricPeerPopulation, direction: KlDirection) -> f64 {
    match direction {
        KlDirection::NullToAlternative => bernoulli_kl(pop.theta0, pop.theta1),
        KlDirection::AlternativeToNull => bernoulli_kl(pop.theta1, pop.theta0),
    }
}

/// Formula used to turn error rates into expected stopping times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleSizeForm {
    /// Wald's identity: `E[N|H0] = [(1−P_F) ln a + P_F ln b] / (−D(p̄0‖p̄1))`,
    /// `E[N|H1] = [(1−P_D) ln a + P_D ln b] / D(p̄1‖p̄0)`.
    #[default]
    Wald,
    /// Same divergences with the branch weights swapped between hypotheses:
    /// `P_D` in place of `1 − P_F` under H0, `P_F` in place of `1 − P_D` under H1.
    SwappedWeights,
    /// `E[N|H0] ≈ −(1−P_D)/D(p̄0‖p̄1)`, `E[N|H1] ≈ −P_F/D(p̄1‖p̄0)`.
    /// Nonpositive for every valid input; kept for comparison only.
    LinearApprox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedSampleSize {
    pub under_h0: f64,
    pub under_h1: f64,
}

impl ExpectedSampleSize {
    pub fn max(&self) -> f64 {
        self.under_h0.max(self.under_h1)
    }

    /// Mixture under the prior.
    pub fn mean(&self, pi0: f64) -> f64 {
        pi0 * self.under_h0 + (1.0 - pi0) * self.under_h1
    }
}

/// Expected number of feedbacks the test consumes, given the error rates it
/// achieves and the population it samples from.
pub fn expected_sample_size(
    achieved: &TargetRates,
    pop: &SymmetricPeerPopulation,
    form: SampleSizeForm,
) -> Result<ExpectedSampleSize> {
    if pop.theta0 == pop.theta1 {
        return Err(Error::DivergenceZero);
    }
    let d01 = kl_divergence(pop, KlDirection::NullToAlternative);
    let d10 = kl_divergence(pop, KlDirection::AlternativeToNull);
    let (pf, pd) = (achieved.p_f_bar, achieved.p_d_bar);
    let th = SprtThresholds::from_targets(achieved);
    let (ln_a, ln_b) = (th.ln_lower(), th.ln_upper());
    let (under_h0, under_h1) = match form {
        SampleSizeForm::Wald => (
            ((1.0 - pf) * ln_a + pf * ln_b) / -d01,
            ((1.0 - pd) * ln_a + pd * ln_b) / d10,
        ),
        SampleSizeForm::SwappedWeights => ((pf * ln_b + pd * ln_a) / -d01, (pf * ln_a + pd * ln_b) / d10),
        SampleSizeForm::LinearApprox => (-(1.0 - pd) / d01, -pf / d10),
    };
    Ok(ExpectedSampleSize { under_h0, under_h1 })
}

/// Acquaintances needed on average: `ceil(max(E[N|H0], E[N|H1]))`, floored at 0.
pub fn acquaintance_bound(achieved: &TargetRates, pop: &SymmetricPeerPopulation, form: SampleSizeForm) -> Result<u64> {
    let e = expected_sample_size(achieved, pop, form)?;
    let bound = e.max().ceil();
    Ok(if bound > 0.0 { bound as u64 } else { 0 })
}
