//! Simulated collaboration network: a complete acquaintance graph of peer models,
//! per-observer trust tables, and one consultation per call.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConsultOrder, ExperimentConfig, ProfileSource};
use crate::aggregate::{simple_average, trust_weight, weighted_average};
use crate::decision::{Feedback, Hypothesis, PeerProfile};
use crate::error::{Error, Result};
use crate::peer::{analytic_rates, AssessmentSampler, PeerModel, Scenario};
use crate::sprt::{SequentialCosts, SequentialTest, SprtThresholds};
use crate::trust::{accumulate, BetaTrust, DiagnosisRecord, RecordClass};
use crate::PeerId;

/// Stream lanes below this value belong to nodes.
const NODE_LANES: u64 = 1 << 32;
pub(crate) const LANE_SCENARIOS: u64 = NODE_LANES;
pub(crate) const LANE_ORDER: u64 = NODE_LANES + 1;
pub(crate) const LANE_POPULATION: u64 = NODE_LANES + 2;

/// Independent random stream for `(seed, replication, lane)`.
pub fn stream(seed: u64, replication: u64, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(lane);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Sprt,
    SimpleAverage,
    WeightedAverage,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Sprt, Scheme::SimpleAverage, Scheme::WeightedAverage];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sprt => "sprt",
            Scheme::SimpleAverage => "simple",
            Scheme::WeightedAverage => "weighted",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsultationResult {
    pub decision: Hypothesis,
    pub consulted: usize,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub model: PeerModel,
    sampler: AssessmentSampler,
    pub acquaintances: Vec<PeerId>,
    /// Aligned with `acquaintances`.
    pub trust: Vec<BetaTrust>,
    /// Profiles fed to the sequential test, aligned with `acquaintances`.
    pub profiles: Vec<PeerProfile>,
    /// Baseline weights, aligned with `acquaintances`.
    pub weights: Vec<f64>,
    /// Indices into `acquaintances` in sequential consultation order.
    order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: ExperimentConfig,
    nodes: Vec<Node>,
    node_streams: Vec<ChaCha8Rng>,
    order_stream: ChaCha8Rng,
    test: SequentialTest,
}

/// Complete graph over `config.n_nodes` nodes with empty trust tables. Each node
/// draws its assessments from its own stream for this replication.
pub fn build_network(config: &ExperimentConfig, replication: u64) -> Result<Network> {
    config.validate()?;
    let n = config.n_nodes;
    let nodes = (0..n)
        .map(|i| {
            let model = PeerModel::new(PeerId(i as u32), config.expertise_of(i), config.tau_p_of(i))?;
            let sampler = AssessmentSampler::new(model, config.difficulty)?;
            let acquaintances: Vec<PeerId> = (0..n).filter(|&j| j != i).map(|j| PeerId(j as u32)).collect();
            let k = acquaintances.len();
            Ok(Node {
                model,
                sampler,
                acquaintances,
                trust: vec![BetaTrust::empty(config.lambda_f, config.lambda_d)?; k],
                profiles: vec![PeerProfile::uninformative(); k],
                weights: vec![0.5; k],
                order: (0..k).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let node_streams = (0..n as u64).map(|i| stream(config.seed, replication, i)).collect();
    let test = SequentialTest::new(
        SprtThresholds::from_targets(&config.targets),
        SequentialCosts::from_cost_matrix(&config.costs, config.feedback_cost)?,
        config.priors.pi0(),
    )?;
    let mut network = Network {
        config: config.clone(),
        nodes,
        node_streams,
        order_stream: stream(config.seed, replication, LANE_ORDER),
        test,
    };
    for i in 0..n {
        network.refresh_node(i)?;
    }
    Ok(network)
}

/// Sends `trust_bootstrap_messages` rounds of test messages from every node to
/// every acquaintance. Round `t` carries one message per class, timestamped `t`;
/// trust is evaluated at the last round.
pub fn bootstrap_trust(network: &mut Network) -> Result<()> {
    let rounds = network.config.trust_bootstrap_messages;
    let now = rounds.saturating_sub(1) as f64;
    let (lambda_f, lambda_d) = (network.config.lambda_f, network.config.lambda_d);
    let mut records = Vec::with_capacity(2 * rounds);
    for i in 0..network.nodes.len() {
        for k in 0..network.nodes[i].acquaintances.len() {
            let peer = network.nodes[i].acquaintances[k].0 as usize;
            records.clear();
            for t in 0..rounds {
                for (class, intrusion) in [(RecordClass::M0, false), (RecordClass::M1, true)] {
                    let y = network.respond(peer, intrusion);
                    records.push(DiagnosisRecord::new(t as f64, class, y == Feedback::Alarm));
                }
            }
            network.nodes[i].trust[k] = accumulate(&records, lambda_f, lambda_d, now)?;
        }
        network.refresh_node(i)?;
    }
    Ok(())
}

impl Network {
    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn sequential_test(&self) -> &SequentialTest {
        &self.test
    }

    /// Removes every acquaintance of `node`.
    pub fn clear_acquaintances(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        n.acquaintances.clear();
        n.trust.clear();
        n.profiles.clear();
        n.weights.clear();
        n.order.clear();
    }

    /// One feedback from `peer` for a scenario at the configured difficulty.
    fn respond(&mut self, peer: usize, intrusion: bool) -> Feedback {
        self.nodes[peer]
            .sampler
            .respond(intrusion, &mut self.node_streams[peer])
    }

    fn refresh_node(&mut self, i: usize) -> Result<()> {
        let difficulty = self.config.difficulty;
        let source = self.config.sprt_profiles;
        let order = self.config.consult_order;
        let models: Vec<PeerModel> = self.nodes.iter().map(|n| n.model).collect();
        let node = &mut self.nodes[i];
        let believed: Vec<PeerProfile> = node.trust.iter().map(BetaTrust::expected_rates).collect();
        node.weights = believed.iter().map(trust_weight).collect();
        node.profiles = match source {
            ProfileSource::Trust => believed,
            ProfileSource::Analytic => node
                .acquaintances
                .iter()
                .map(|p| analytic_rates(&models[p.0 as usize], difficulty))
                .collect::<Result<_>>()?,
        };
        node.order = (0..node.acquaintances.len()).collect();
        if order == ConsultOrder::TrustDescending {
            let (w, ids) = (&node.weights, &node.acquaintances);
            node.order
                .sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(ids[a].cmp(&ids[b])));
        }
        Ok(())
    }

    /// Feedback of every acquaintance of `node`, aligned with its acquaintance list.
    pub fn collect_feedback(&mut self, node: usize, intrusion: bool) -> Vec<Feedback> {
        let peers: Vec<usize> = self.nodes[node].acquaintances.iter().map(|p| p.0 as usize).collect();
        peers.into_iter().map(|p| self.respond(p, intrusion)).collect()
    }

    fn sequential_order(&mut self, node: usize) -> Vec<usize> {
        let mut order = self.nodes[node].order.clone();
        if self.config.consult_order == ConsultOrder::Random {
            order.shuffle(&mut self.order_stream);
        }
        order
    }

    /// Applies `scheme` to feedback already collected from all acquaintances.
    ///
    /// The sequential test reads the feedback in consultation order and stops early;
    /// the baselines use all of it.
    pub fn decide(&mut self, node: usize, feedback: &[Feedback], scheme: Scheme) -> Result<ConsultationResult> {
        if feedback.len() != self.nodes[node].acquaintances.len() {
            return Err(Error::LengthMismatch {
                feedbacks: feedback.len(),
                profiles: self.nodes[node].acquaintances.len(),
            });
        }
        let all = feedback.len();
        match scheme {
            Scheme::Sprt => {
                let order = self.sequential_order(node);
                let n = &self.nodes[node];
                let peers = order.iter().map(|&k| (n.acquaintances[k], n.profiles[k]));
                let index_of = |p: PeerId| n.acquaintances.iter().position(|&q| q == p).expect("known peer");
                let (decision, consulted) = self.test.decide(peers, |p| feedback[index_of(p)])?;
                Ok(ConsultationResult { decision, consulted })
            }
            Scheme::SimpleAverage => Ok(ConsultationResult {
                decision: simple_average(feedback, self.config.aggregator.tau_sa)?,
                consulted: all,
            }),
            Scheme::WeightedAverage => Ok(ConsultationResult {
                decision: weighted_average(feedback, &self.nodes[node].weights, self.config.aggregator.tau_wa)?,
                consulted: all,
            }),
        }
    }

    /// Sequential test forced to consume exactly `min(n, list)` feedbacks.
    pub fn decide_truncated(&mut self, node: usize, feedback: &[Feedback], n: usize) -> Result<ConsultationResult> {
        let order = self.sequential_order(node);
        let nd = &self.nodes[node];
        let peers = order.iter().map(|&k| (nd.acquaintances[k], nd.profiles[k]));
        let index_of = |p: PeerId| nd.acquaintances.iter().position(|&q| q == p).expect("known peer");
        let (decision, consulted) = self.test.decide_after(peers, |p| feedback[index_of(p)], n)?;
        Ok(ConsultationResult { decision, consulted })
    }

    /// Draws fresh feedback for `scenario` from every acquaintance of `node` and decides.
    pub fn run_consultation(&mut self, node: usize, scenario: &Scenario, scheme: Scheme) -> Result<ConsultationResult> {
        let feedback = if scenario.difficulty == self.config.difficulty {
            self.collect_feedback(node, scenario.intrusion)
        } else {
            let peers: Vec<usize> = self.nodes[node].acquaintances.iter().map(|p| p.0 as usize).collect();
            peers
                .into_iter()
                .map(|p| {
                    let sampler = AssessmentSampler::new(self.nodes[p].model, scenario.difficulty)?;
                    Ok(sampler.respond(scenario.intrusion, &mut self.node_streams[p]))
                })
                .collect::<Result<Vec<_>>>()?
        };
        self.decide(node, &feedback, scheme)
    }
}
