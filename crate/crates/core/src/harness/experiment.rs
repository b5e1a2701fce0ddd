//! The six sweep experiments. Each sweep point runs `replications` independent
//! replications of `scenarios` consultations; every replication owns its network
//! copy and random streams, so replications may run in any order or in parallel.
//!
//! Ground truth is stratified: each replication contains exactly
//! `round(π1 · scenarios)` intrusions in shuffled order. Per-replication rates then
//! share denominators, and their average equals the pooled rate.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::ExperimentConfig;
use super::network::{bootstrap_trust, build_network, stream, Network, Scheme, LANE_POPULATION, LANE_SCENARIOS};
use super::report::{Column, ResultRow};
use crate::decision::{CostMatrix, Hypothesis, PeerProfile, RATE_EPSILON};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::peer::{analytic_rates, AssessmentSampler, PeerModel};
use crate::sprt::{
    acquaintance_bound, expected_sample_size, SampleSizeForm, SequentialCosts, SequentialTest, SprtThresholds,
    SymmetricPeerPopulation, TargetRates,
};
use crate::PeerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    /// Peer FP/FN rates against expertise.
    Fig2,
    /// Peer FP/FN rates against decision threshold.
    Fig3,
    /// Average cost of the three schemes against decision threshold.
    Fig4,
    /// Average cost of the three schemes against miss cost.
    Fig5,
    /// Sequential FP/TP against a forced number of consultations.
    Fig6,
    /// Consultations needed to meet the targets against expertise, simulated and predicted.
    Fig7,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Fig2,
        ExperimentId::Fig3,
        ExperimentId::Fig4,
        ExperimentId::Fig5,
        ExperimentId::Fig6,
        ExperimentId::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Fig7 => "fig7",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// Decision counts of one replication for one scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub h0: usize,
    pub h1: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub cost: f64,
    pub consulted_h0: usize,
    pub consulted_h1: usize,
}

impl Tally {
    pub fn record(&mut self, decision: Hypothesis, intrusion: bool, consulted: usize, costs: &CostMatrix) {
        self.cost += costs.cost(decision, Hypothesis::from(intrusion));
        if intrusion {
            self.h1 += 1;
            self.consulted_h1 += consulted;
            if !decision.is_alarm() {
                self.false_negatives += 1;
            }
        } else {
            self.h0 += 1;
            self.consulted_h0 += consulted;
            if decision.is_alarm() {
                self.false_positives += 1;
            }
        }
    }

    pub fn total(&self) -> usize {
        self.h0 + self.h1
    }

    pub fn fp_rate(&self) -> f64 {
        ratio(self.false_positives, self.h0)
    }

    pub fn fn_rate(&self) -> f64 {
        ratio(self.false_negatives, self.h1)
    }

    pub fn tp_rate(&self) -> f64 {
        if self.h1 == 0 {
            0.0
        } else {
            1.0 - self.fn_rate()
        }
    }

    pub fn avg_cost(&self) -> f64 {
        self.cost / self.total().max(1) as f64
    }

    pub fn avg_consulted(&self) -> f64 {
        ratio(self.consulted_h0 + self.consulted_h1, self.total())
    }

    pub fn avg_consulted_h0(&self) -> f64 {
        ratio(self.consulted_h0, self.h0)
    }

    pub fn avg_consulted_h1(&self) -> f64 {
        ratio(self.consulted_h1, self.h1)
    }

    pub fn merge(&mut self, other: &Tally) {
        self.h0 += other.h0;
        self.h1 += other.h1;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.cost += other.cost;
        self.consulted_h0 += other.consulted_h0;
        self.consulted_h1 += other.consulted_h1;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Shuffled ground truths with exactly `round(π1 · n)` intrusions.
pub fn truth_schedule<R: Rng + ?Sized>(n: usize, pi1: f64, rng: &mut R) -> Vec<bool> {
    let intrusions = ((pi1 * n as f64).round() as usize).min(n);
    let mut truths: Vec<bool> = (0..n).map(|i| i < intrusions).collect();
    truths.shuffle(rng);
    truths
}

pub fn run_experiment(id: ExperimentId, config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with(id, config, Execution::default())
}

pub fn run_experiment_with(id: ExperimentId, config: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    config.validate()?;
    match id {
        ExperimentId::Fig2 => peer_sweep(id, "expertise", &grid(1, 9, 10.0), config, exec, |cfg, x| {
            cfg.expertise = vec![x];
        }),
        ExperimentId::Fig3 => peer_sweep(id, "tau_p", &grid(0, 10, 10.0), config, exec, |cfg, x| {
            cfg.tau_p = vec![x];
        }),
        ExperimentId::Fig4 => scheme_sweep(id, "tau_p", &grid(1, 9, 10.0), config, exec, |cfg, x| {
            cfg.tau_p = vec![x];
        }),
        ExperimentId::Fig5 => {
            let spread = spread_thresholds(config.n_nodes);
            scheme_sweep(id, "c01", &grid(1, 8, 1.0), config, exec, move |cfg, x| {
                cfg.tau_p = spread.clone();
                cfg.costs.c01 = x;
            })
        }
        ExperimentId::Fig6 => truncation_sweep(config, exec),
        ExperimentId::Fig7 => population_sweep(config, exec),
    }
}

fn grid(from: i32, to: i32, scale: f64) -> Vec<f64> {
    (from..=to).map(|i| f64::from(i) / scale).collect()
}

/// Thresholds evenly spaced over `[0.1, 0.9]`, one per node.
pub fn spread_thresholds(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n).map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64).collect()
}

fn rate_columns(prefix: &str, tallies: &[Tally], with_cost: bool) -> Vec<Column> {
    let pick = |f: fn(&Tally) -> f64| tallies.iter().map(f).collect::<Vec<_>>();
    let mut cols = vec![
        Column::stat(format!("{prefix}_fp_rate"), &pick(Tally::fp_rate)),
        Column::stat(format!("{prefix}_fn_rate"), &pick(Tally::fn_rate)),
        Column::stat(format!("{prefix}_tp_rate"), &pick(Tally::tp_rate)),
    ];
    if with_cost {
        cols.push(Column::stat(format!("{prefix}_avg_cost"), &pick(Tally::avg_cost)));
        cols.push(Column::stat(
            format!("{prefix}_avg_consultations"),
            &pick(Tally::avg_consulted),
        ));
    }
    cols
}

/// Rates of a single peer answering consultations directly.
fn peer_sweep(
    id: ExperimentId,
    param: &'static str,
    points: &[f64],
    base: &ExperimentConfig,
    exec: Execution,
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<ResultRow>> {
    points
        .iter()
        .map(|&x| {
            let mut cfg = base.clone();
            apply(&mut cfg, x);
            cfg.validate()?;
            let model = PeerModel::new(PeerId(0), cfg.expertise_of(0), cfg.tau_p_of(0))?;
            let sampler = AssessmentSampler::new(model, cfg.difficulty)?;
            let tallies = map_indexed(cfg.replications, exec, |r| {
                let mut truth_rng = stream(cfg.seed, r as u64, LANE_SCENARIOS);
                let mut rng = stream(cfg.seed, r as u64, 0);
                let mut tally = Tally::default();
                for intrusion in truth_schedule(cfg.scenarios, cfg.priors.pi1(), &mut truth_rng) {
                    let y = sampler.respond(intrusion, &mut rng);
                    tally.record(Hypothesis::from(y.as_u8() == 1), intrusion, 1, &cfg.costs);
                }
                tally
            });
            let analytic = analytic_rates(&model, cfg.difficulty)?;
            let mut columns = rate_columns("peer", &tallies, false);
            columns.push(Column::scalar("analytic_fp_rate", analytic.p_false_alarm()));
            columns.push(Column::scalar("analytic_fn_rate", analytic.p_miss()));
            Ok(ResultRow {
                experiment: id,
                param,
                value: x,
                columns,
            })
        })
        .collect()
}

/// One replication of the network experiment: the three schemes decide on the same
/// feedback draws.
pub fn simulate_schemes(cfg: &ExperimentConfig, replication: u64) -> Result<[Tally; 3]> {
    let mut net = prepared_network(cfg, replication)?;
    let mut truth_rng = stream(cfg.seed, replication, LANE_SCENARIOS);
    let mut tallies = [Tally::default(); 3];
    for (s, intrusion) in truth_schedule(cfg.scenarios, cfg.priors.pi1(), &mut truth_rng)
        .into_iter()
        .enumerate()
    {
        let node = s % cfg.n_nodes;
        let feedback = net.collect_feedback(node, intrusion);
        for (tally, scheme) in tallies.iter_mut().zip(Scheme::ALL) {
            let r = net.decide(node, &feedback, scheme)?;
            tally.record(r.decision, intrusion, r.consulted, &cfg.costs);
        }
    }
    Ok(tallies)
}

fn prepared_network(cfg: &ExperimentConfig, replication: u64) -> Result<Network> {
    let mut net = build_network(cfg, replication)?;
    bootstrap_trust(&mut net)?;
    Ok(net)
}

fn scheme_sweep(
    id: ExperimentId,
    param: &'static str,
    points: &[f64],
    base: &ExperimentConfig,
    exec: Execution,
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<ResultRow>> {
    points
        .iter()
        .map(|&x| {
            let mut cfg = base.clone();
            apply(&mut cfg, x);
            cfg.validate()?;
            let per_rep = map_indexed(cfg.replications, exec, |r| simulate_schemes(&cfg, r as u64))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let mut columns = Vec::new();
            for (k, scheme) in Scheme::ALL.into_iter().enumerate() {
                let tallies: Vec<Tally> = per_rep.iter().map(|t| t[k]).collect();
                columns.extend(rate_columns(scheme.name(), &tallies, true));
            }
            Ok(ResultRow {
                experiment: id,
                param,
                value: x,
                columns,
            })
        })
        .collect()
}

fn truncation_sweep(base: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    (1..base.n_nodes)
        .map(|n| {
            let per_rep = map_indexed(base.replications, exec, |r| -> Result<Tally> {
                let mut net = prepared_network(base, r as u64)?;
                let mut truth_rng = stream(base.seed, r as u64, LANE_SCENARIOS);
                let mut tally = Tally::default();
                for (s, intrusion) in truth_schedule(base.scenarios, base.priors.pi1(), &mut truth_rng)
                    .into_iter()
                    .enumerate()
                {
                    let node = s % base.n_nodes;
                    let feedback = net.collect_feedback(node, intrusion);
                    let r = net.decide_truncated(node, &feedback, n)?;
                    tally.record(r.decision, intrusion, r.consulted, &base.costs);
                }
                Ok(tally)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            Ok(ResultRow {
                experiment: ExperimentId::Fig6,
                param: "n",
                value: n as f64,
                columns: rate_columns("sprt", &per_rep, true),
            })
        })
        .collect()
}

/// A homogeneous, unbounded supply of acquaintances whose rates the consulting
/// node knows exactly.
#[derive(Debug, Clone, Copy)]
pub struct PopulationSetup {
    pub sampler: AssessmentSampler,
    pub profile: PeerProfile,
    pub test: SequentialTest,
}

impl PopulationSetup {
    pub fn new(
        model: PeerModel,
        difficulty: f64,
        targets: &TargetRates,
        costs: SequentialCosts,
        pi0: f64,
    ) -> Result<Self> {
        Ok(Self {
            sampler: AssessmentSampler::new(model, difficulty)?,
            profile: analytic_rates(&model, difficulty)?,
            test: SequentialTest::new(SprtThresholds::from_targets(targets), costs, pi0)?,
        })
    }

    pub fn population(&self) -> SymmetricPeerPopulation {
        SymmetricPeerPopulation::from_profile(&self.profile)
    }

    /// Runs one sequential consultation per ground truth, drawing a fresh peer for
    /// every feedback.
    pub fn run<R: Rng + ?Sized>(&self, truths: &[bool], costs: &CostMatrix, rng: &mut R) -> Result<Tally> {
        let mut tally = Tally::default();
        for &intrusion in truths {
            let peers = (0u32..).map(|i| (PeerId(i), self.profile));
            let (decision, n) = self.test.decide(peers, |_| self.sampler.respond(intrusion, rng))?;
            tally.record(decision, intrusion, n, costs);
        }
        Ok(tally)
    }
}

/// Stopping-time statistics of the sequential test over a homogeneous population,
/// `runs` consultations under each hypothesis.
pub fn stopping_study(setup: &PopulationSetup, runs: usize, seed: u64, exec: Execution) -> Result<Tally> {
    const CHUNK: usize = 2_000;
    let chunks = runs.div_ceil(CHUNK);
    let costs = CostMatrix::errors_only(setup.test.costs.c_f, setup.test.costs.c_m)?;
    let parts = map_indexed(chunks, exec, |c| -> Result<Tally> {
        let len = CHUNK.min(runs - c * CHUNK);
        let mut rng = stream(seed, c as u64, LANE_POPULATION);
        let mut t = setup.run(&vec![false; len], &costs, &mut rng)?;
        t.merge(&setup.run(&vec![true; len], &costs, &mut rng)?);
        Ok(t)
    });
    let mut total = Tally::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

fn population_sweep(base: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    let costs = SequentialCosts::from_cost_matrix(&base.costs, base.feedback_cost)?;
    grid(1, 9, 10.0)
        .into_iter()
        .map(|l| {
            let model = PeerModel::new(PeerId(0), l, base.tau_p_of(0))?;
            let setup = PopulationSetup::new(model, base.difficulty, &base.targets, costs, base.priors.pi0())?;
            let tallies = map_indexed(base.replications, exec, |r| {
                let mut truth_rng = stream(base.seed, r as u64, LANE_SCENARIOS);
                let mut rng = stream(base.seed, r as u64, LANE_POPULATION);
                let truths = truth_schedule(base.scenarios, base.priors.pi1(), &mut truth_rng);
                setup.run(&truths, &base.costs, &mut rng)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

            let pick = |f: fn(&Tally) -> f64| tallies.iter().map(f).collect::<Vec<_>>();
            let mut columns = vec![
                Column::stat("sim_mean_n", &pick(Tally::avg_consulted)),
                Column::stat("sim_mean_n_h0", &pick(Tally::avg_consulted_h0)),
                Column::stat("sim_mean_n_h1", &pick(Tally::avg_consulted_h1)),
                Column::stat("sim_fp_rate", &pick(Tally::fp_rate)),
                Column::stat("sim_tp_rate", &pick(Tally::tp_rate)),
            ];
            let pop = setup.population();
            columns.push(Column::scalar(
                "theory_n",
                acquaintance_bound(&base.targets, &pop, SampleSizeForm::Wald)? as f64,
            ));
            columns.push(Column::scalar(
                "theory_n_swapped_weights",
                acquaintance_bound(&base.targets, &pop, SampleSizeForm::SwappedWeights)? as f64,
            ));
            // Wald's identity evaluated at the error rates the simulation achieved
            let mut pooled = Tally::default();
            tallies.iter().for_each(|t| pooled.merge(t));
            let clamp = |p: f64| p.clamp(RATE_EPSILON, 1.0 - RATE_EPSILON);
            let at_achieved = TargetRates::new(clamp(pooled.fp_rate()), clamp(pooled.tp_rate()))
                .and_then(|achieved| expected_sample_size(&achieved, &pop, SampleSizeForm::Wald))
                .map(|e| e.mean(base.priors.pi0()))
                .unwrap_or(f64::NAN);
            columns.push(Column::scalar("wald_n_at_achieved", at_achieved));
            Ok(ResultRow {
                experiment: ExperimentId::Fig7,
                param: "expertise",
                value: l,
                columns,
            })
        })
        .collect()
}
