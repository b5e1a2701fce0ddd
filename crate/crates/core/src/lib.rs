//! Sequential hypothesis testing for feedback aggregation in collaborative
//! intrusion detection networks.
//!
//! A node that sees a suspicious event asks its acquaintances for feedback one at a
//! time and stops as soon as the evidence is strong enough. The crate provides the
//! fixed-sample Bayes rule ([`decision`]), the sequential test and its expected
//! stopping time ([`sprt`]), Beta trust estimates of peer rates ([`trust`]), a
//! generative peer model ([`peer`]), average-based baselines ([`aggregate`]), and a
//! harness that reproduces the evaluation sweeps ([`harness`]).

use std::fmt;

pub mod aggregate;
pub mod decision;
pub mod error;
pub mod exec;
pub mod harness;
pub mod peer;
pub mod sprt;
pub mod trust;

pub use decision::{CostMatrix, Feedback, Hypothesis, PeerProfile, Priors};
pub use error::{Error, Result};
pub use exec::Execution;
pub use sprt::{SequentialCosts, SequentialTest, SprtThresholds, TargetRates};

/// Identifier of a node in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeerId(pub u32);

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "peer {}", self.0)
    }
}
