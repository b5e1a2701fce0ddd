use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::aggregate::AggregatorConfig;
use crate::decision::{CostMatrix, Priors};
use crate::error::{Error, Result};
use crate::sprt::TargetRates;

/// Order in which a node walks its acquaintances during a sequential consultation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsultOrder {
    /// Highest trust weight first, ties broken by peer id.
    #[default]
    TrustDescending,
    ListOrder,
    Random,
}

impl FromStr for ConsultOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trust" | "trust-descending" => Ok(Self::TrustDescending),
            "list" | "list-order" => Ok(Self::ListOrder),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!("unknown consult_order `{other}`"))),
        }
    }
}

impl fmt::Display for ConsultOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TrustDescending => "trust",
            Self::ListOrder => "list",
            Self::Random => "random",
        })
    }
}

/// Where a node gets the peer profiles its sequential test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileSource {
    /// Expected rates of the node's own Beta trust counters.
    #[default]
    Trust,
    /// True rates of the generative peer model.
    Analytic,
}

impl FromStr for ProfileSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trust" => Ok(Self::Trust),
            "analytic" => Ok(Self::Analytic),
            other => Err(Error::Config(format!("unknown sprt_profiles `{other}`"))),
        }
    }
}

impl fmt::Display for ProfileSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Trust => "trust",
            Self::Analytic => "analytic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    /// One value for all nodes, or one per node.
    pub expertise: Vec<f64>,
    /// One value for all nodes, or one per node.
    pub tau_p: Vec<f64>,
    pub difficulty: f64,
    pub costs: CostMatrix,
    pub priors: Priors,
    pub targets: TargetRates,
    pub lambda_f: f64,
    pub lambda_d: f64,
    pub replications: usize,
    /// Consultation scenarios per replication and sweep point.
    pub scenarios: usize,
    pub seed: u64,
    /// Test messages per acquaintance per class.
    pub trust_bootstrap_messages: usize,
    pub aggregator: AggregatorConfig,
    pub consult_order: ConsultOrder,
    pub sprt_profiles: ProfileSource,
    /// Cost per feedback request. Reported only; thresholds come from the targets.
    pub feedback_cost: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            expertise: vec![0.5],
            tau_p: vec![0.5],
            difficulty: 0.5,
            costs: CostMatrix::default(),
            priors: Priors::default(),
            targets: TargetRates::default(),
            lambda_f: 0.9,
            lambda_d: 0.9,
            replications: 100,
            scenarios: 100,
            seed: 1,
            trust_bootstrap_messages: 200,
            aggregator: AggregatorConfig::default(),
            consult_order: ConsultOrder::default(),
            sprt_profiles: ProfileSource::default(),
            feedback_cost: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn expertise_of(&self, node: usize) -> f64 {
        per_node(&self.expertise, node)
    }

    pub fn tau_p_of(&self, node: usize) -> f64 {
        per_node(&self.tau_p, node)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_nodes < 2 {
            return bad(format!("n_nodes must be at least 2, got {}", self.n_nodes));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.scenarios == 0 {
            return bad("scenarios must be at least 1".into());
        }
        for (name, values) in [("expertise", &self.expertise), ("tau_p", &self.tau_p)] {
            if values.len() != 1 && values.len() != self.n_nodes {
                return bad(format!(
                    "{name} needs 1 or {} values, got {}",
                    self.n_nodes,
                    values.len()
                ));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return bad(format!("{name} values must lie in [0, 1], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.difficulty) {
            return bad(format!("difficulty must lie in [0, 1], got {}", self.difficulty));
        }
        for (name, l) in [("lambda_f", self.lambda_f), ("lambda_d", self.lambda_d)] {
            if !(l > 0.0 && l <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {l}"));
            }
        }
        for (name, t) in [("tau_sa", self.aggregator.tau_sa), ("tau_wa", self.aggregator.tau_wa)] {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("{name} must lie in [0, 1], got {t}"));
            }
        }
        if self.feedback_cost.is_nan() || self.feedback_cost < 0.0 {
            return bad(format!("feedback_cost must be nonnegative, got {}", self.feedback_cost));
        }
        self.costs.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Applies `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut pi1 = None;
        let (mut c00, mut c01, mut c10, mut c11) = (cfg.costs.c00, cfg.costs.c01, cfg.costs.c10, cfg.costs.c11);
        let (mut p_f_bar, mut p_d_bar) = (cfg.targets.p_false_alarm(), cfg.targets.p_detection());
        let mut pi0 = cfg.priors.pi0();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: Error| Error::Config(format!("line {lineno} ({key}): {e}"));
            match key {
                "n_nodes" => cfg.n_nodes = num(value).map_err(ctx)?,
                "expertise" => cfg.expertise = list(value).map_err(ctx)?,
                "tau_p" => cfg.tau_p = list(value).map_err(ctx)?,
                "difficulty" => cfg.difficulty = num(value).map_err(ctx)?,
                "c00" => c00 = num(value).map_err(ctx)?,
                "c01" => c01 = num(value).map_err(ctx)?,
                "c10" => c10 = num(value).map_err(ctx)?,
                "c11" => c11 = num(value).map_err(ctx)?,
                "pi0" => pi0 = num(value).map_err(ctx)?,
                "pi1" => pi1 = Some(num(value).map_err(ctx)?),
                "p_f_bar" => p_f_bar = num(value).map_err(ctx)?,
                "p_d_bar" => p_d_bar = num(value).map_err(ctx)?,
                "lambda_f" => cfg.lambda_f = num(value).map_err(ctx)?,
                "lambda_d" => cfg.lambda_d = num(value).map_err(ctx)?,
                "replications" => cfg.replications = num(value).map_err(ctx)?,
                "scenarios" => cfg.scenarios = num(value).map_err(ctx)?,
                "seed" => cfg.seed = num(value).map_err(ctx)?,
                "trust_bootstrap_messages" => cfg.trust_bootstrap_messages = num(value).map_err(ctx)?,
                "tau_sa" => cfg.aggregator.tau_sa = num(value).map_err(ctx)?,
                "tau_wa" => cfg.aggregator.tau_wa = num(value).map_err(ctx)?,
                "consult_order" => cfg.consult_order = value.parse().map_err(ctx)?,
                "sprt_profiles" => cfg.sprt_profiles = value.parse().map_err(ctx)?,
                "feedback_cost" => cfg.feedback_cost = num(value).map_err(ctx)?,
                other => return Err(Error::Config(format!("line {lineno}: unknown key `{other}`"))),
            }
        }

        let as_config = |e: Error| Error::Config(e.to_string());
        cfg.priors = match pi1 {
            Some(pi1) => Priors::from_pair(pi0, pi1),
            None => Priors::new(pi0),
        }
        .map_err(as_config)?;
        cfg.costs = CostMatrix::new(c00, c01, c10, c11).map_err(as_config)?;
        cfg.targets = TargetRates::new(p_f_bar, p_d_bar).map_err(as_config)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn per_node(values: &[f64], node: usize) -> f64 {
    if values.len() == 1 {
        values[0]
    } else {
        values[node]
    }
}

fn num<T: FromStr>(value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::Config(format!("cannot parse `{value}`: {e}")))
}

fn list(value: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = value.split(',').map(|v| num(v.trim())).collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Config("empty list".into()));
    }
    Ok(values)
}
