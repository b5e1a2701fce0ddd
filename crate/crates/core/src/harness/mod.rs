//! Monte Carlo experiment harness: configuration, simulated network, sweeps and
//! CSV output.

pub mod config;
pub mod experiment;
pub mod network;
pub mod report;

pub use config::{ConsultOrder, ExperimentConfig, ProfileSource};
pub use experiment::{
    run_experiment, run_experiment_with, simulate_schemes, spread_thresholds, stopping_study, truth_schedule,
    ExperimentId, PopulationSetup, Tally,
};
pub use network::{bootstrap_trust, build_network, stream, ConsultationResult, Network, Node, Scheme};
pub use report::{emit_csv, format_sig, mean_and_se, Column, ResultRow};
