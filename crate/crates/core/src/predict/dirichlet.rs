use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_cluster::ClusterLabel;

use super::{argmax_non_outlier, Prediction};

/// Posterior pseudocounts of a categorical distribution over cluster
/// labels. The event probability of a label is its pseudocount over the
/// total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletCategorical {
    pseudocounts: BTreeMap<ClusterLabel, f64>,
}

impl DirichletCategorical {
    pub fn new(labels: impl IntoIterator<Item = ClusterLabel>, prior: f64) -> Self {
        DirichletCategorical {
            pseudocounts: labels.into_iter().map(|l| (l, prior)).collect(),
        }
    }

    pub fn pseudocount(&self, label: ClusterLabel) -> Option<f64> {
        self.pseudocounts.get(&label).copied()
    }

    pub fn pseudocounts(&self) -> &BTreeMap<ClusterLabel, f64> {
        &self.pseudocounts
    }

    pub fn labels(&self) -> impl Iterator<Item = ClusterLabel> + '_ {
        self.pseudocounts.keys().copied()
    }

    pub fn total(&self) -> f64 {
        self.pseudocounts.values().sum()
    }

    /// Adds one observation of `label`.
    pub fn observe(&mut self, label: ClusterLabel) -> Result<()> {
        *self.pseudocounts.get_mut(&label).ok_or(Error::UnknownLabel(label))? += 1.0;
        Ok(())
    }

    /// Adds `label` with the given prior pseudocount.
    pub fn extend(&mut self, label: ClusterLabel, prior: f64) -> Result<()> {
        if self.pseudocounts.contains_key(&label) {
            return Err(Error::InvalidInput(format!("label {label} already present")));
        }
        self.pseudocounts.insert(label, prior);
        Ok(())
    }

    /// Replaces `sources` by `survivor` carrying their summed pseudocount.
    pub fn merge(&mut self, sources: &[ClusterLabel], survivor: ClusterLabel) -> Result<()> {
        if let Some(&missing) = sources.iter().find(|l| !self.pseudocounts.contains_key(l)) {
            return Err(Error::UnknownLabel(missing));
        }
        let mass: f64 = sources.iter().map(|l| self.pseudocounts.remove(l).unwrap_or(0.0)).sum();
        *self.pseudocounts.entry(survivor).or_insert(0.0) += mass;
        Ok(())
    }

    /// Label-wise pseudocount addition.
    pub fn absorb(&mut self, other: &DirichletCategorical) {
        for (&l, &c) in &other.pseudocounts {
            *self.pseudocounts.entry(l).or_insert(0.0) += c;
        }
    }

    pub fn probabilities(&self) -> BTreeMap<ClusterLabel, f64> {
        super::normalize(self.pseudocounts.clone())
    }

    pub fn predict(&self) -> Prediction {
        let distribution = self.probabilities();
        let choice = argmax_non_outlier(
            distribution
                .iter()
                .map(|(&l, &p)| (l, p, self.pseudocounts[&l])),
        );
        Prediction { distribution, choice }
    }
}
