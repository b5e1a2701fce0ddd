use std::io;

use crate::PeerId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {feedbacks} feedbacks vs {profiles} profiles")]
    LengthMismatch { feedbacks: usize, profiles: usize },

    #[error("degenerate prior: probability of intrusion is zero")]
    DegeneratePrior,

    #[error("peer {0} has already been consulted")]
    DuplicatePeer(PeerId),

    #[error("peer population is uninformative (theta0 == theta1), divergence is zero")]
    DivergenceZero,

    #[error("insufficient data: alpha + beta must be positive")]
    InsufficientData,

    #[error("record timestamp {timestamp} is later than evaluation time {now}")]
    FutureRecord { timestamp: f64, now: f64 },

    /// Expertise of 1 or difficulty of 0: the assessment is exactly the ground truth.
    #[error("deterministic limit: assessment equals ground truth")]
    DeterministicLimit,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")))
    }
}
