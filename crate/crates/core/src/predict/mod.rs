//! Next-destination models: sequential Dirichlet-categorical, the
//! follow-the-awake-leader expert model, and three baselines.

mod baselines;
mod bayes;
mod dirichlet;
mod experts;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_cluster::{ClusterEvent, ClusterLabel};

pub use baselines::ExpWeightsModel;
pub use bayes::{BayesianModel, Priors};
pub use dirichlet::DirichletCategorical;
pub use experts::{AbstainPolicy, ExpertModel, ExpertPool, ExpertTally};

/// A predicted destination distribution and the chosen destination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Probability per live label, Outlier included. Sums to 1.
    pub distribution: BTreeMap<ClusterLabel, f64>,
    /// Argmax over non-Outlier labels; `None` means the model abstained.
    pub choice: Option<ClusterLabel>,
}

impl Prediction {
    pub fn abstained(&self) -> bool {
        self.choice.is_none()
    }
}

/// Argmax over non-Outlier entries of `(label, score, evidence)`.
/// Ties go to larger evidence, then to the smaller label.
pub(crate) fn argmax_non_outlier<I>(entries: I) -> Option<ClusterLabel>
where
    I: IntoIterator<Item = (ClusterLabel, f64, f64)>,
{
    let mut best: Option<(ClusterLabel, f64, f64)> = None;
    for (label, score, evidence) in entries {
        if label.is_outlier() {
            continue;
        }
        let better = match best {
            None => true,
            Some((bl, bs, be)) => score > bs || (score == bs && (evidence > be || (evidence == be && label < bl))),
        };
        if better {
            best = Some((label, score, evidence));
        }
    }
    best.map(|(l, _, _)| l)
}

pub(crate) fn normalize(weights: BTreeMap<ClusterLabel, f64>) -> BTreeMap<ClusterLabel, f64> {
    let total: f64 = weights.values().sum();
    if total > 0.0 {
        weights.into_iter().map(|(k, w)| (k, w / total)).collect()
    } else {
        let n = weights.len() as f64;
        weights.into_keys().map(|k| (k, 1.0 / n)).collect()
    }
}

/// The prediction models a run can evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bayes,
    Expert,
    Unconditioned,
    ExpWeights,
    Greedy,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Bayes,
        ModelKind::Expert,
        ModelKind::Unconditioned,
        ModelKind::ExpWeights,
        ModelKind::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bayes => "bayes",
            ModelKind::Expert => "expert",
            ModelKind::Unconditioned => "unconditioned",
            ModelKind::ExpWeights => "expweights",
            ModelKind::Greedy => "greedy",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

/// Hyperparameters shared by all models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub priors: Priors,
    /// Exponential-weights learning rate.
    pub eta: f64,
    /// Smoothing added to expert averages when they are turned into a distribution.
    pub expert_smoothing: f64,
    pub abstain: AbstainPolicy,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            priors: Priors::default(),
            eta: 0.5,
            expert_smoothing: 1.0,
            abstain: AbstainPolicy::Abstain,
            seed: 0,
        }
    }
}

/// A destination model as a per-user state machine.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Bayes(BayesianModel),
    Expert(Box<ExpertModel>),
    /// Global destination distribution, never conditioned on the source.
    Unconditioned(BayesianModel),
    #[serde(rename = "expweights")]
    ExpWeights(ExpWeightsModel),
    /// The Bayesian argmax with all of the mass.
    Greedy(BayesianModel),
}

impl Model {
    /// A fresh model over `labels` (Outlier is always added).
    pub fn new(kind: ModelKind, labels: &[ClusterLabel], config: &ModelConfig) -> Model {
        match kind {
            ModelKind::Bayes => Model::Bayes(BayesianModel::new(labels, config.priors)),
            ModelKind::Unconditioned => Model::Unconditioned(BayesianModel::new(labels, config.priors)),
            ModelKind::Greedy => Model::Greedy(BayesianModel::new(labels, config.priors)),
            ModelKind::Expert => Model::Expert(Box::new(ExpertModel::new(
                labels,
                config.expert_smoothing,
                config.abstain,
                config.seed,
            ))),
            ModelKind::ExpWeights => Model::ExpWeights(ExpWeightsModel::new(labels, config.eta)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Bayes(_) => ModelKind::Bayes,
            Model::Expert(_) => ModelKind::Expert,
            Model::Unconditioned(_) => ModelKind::Unconditioned,
            Model::ExpWeights(_) => ModelKind::ExpWeights,
            Model::Greedy(_) => ModelKind::Greedy,
        }
    }

    pub fn predict(&mut self, source: ClusterLabel) -> Prediction {
        match self {
            Model::Bayes(m) => m.predict(source),
            Model::Expert(m) => m.predict(source),
            Model::Unconditioned(m) => m.predict(ClusterLabel::Outlier),
            Model::ExpWeights(m) => m.predict(source),
            Model::Greedy(m) => {
                let base = m.predict(source);
                let top = base.choice.unwrap_or(ClusterLabel::Outlier);
                let distribution = base
                    .distribution
                    .keys()
                    .map(|&k| (k, if k == top { 1.0 } else { 0.0 }))
                    .collect();
                Prediction { distribution, choice: base.choice }
            }
        }
    }

    /// Applies the clusterer's events, then learns from `source -> actual`.
    /// Both labels must already be expressed in the post-event label space.
    pub fn update(&mut self, source: ClusterLabel, actual: ClusterLabel, events: &[ClusterEvent]) -> Result<()> {
        match self {
            Model::Bayes(m) | Model::Unconditioned(m) | Model::Greedy(m) => m.update(source, actual, events),
            Model::Expert(m) => m.update(source, actual, events),
            Model::ExpWeights(m) => m.update(source, actual, events),
        }
    }
}
