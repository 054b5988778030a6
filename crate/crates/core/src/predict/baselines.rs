//! Exponential-weights baseline: per-source multiplicative weights over
//! destination experts, `w_k ∝ exp(η · R_k)` with `R_k` the cumulative reward.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_cluster::{ClusterEvent, ClusterLabel};

use super::{argmax_non_outlier, Prediction};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct RewardPool {
    rewards: BTreeMap<ClusterLabel, f64>,
}

impl RewardPool {
    fn new(labels: impl IntoIterator<Item = ClusterLabel>) -> Self {
        RewardPool {
            rewards: labels.into_iter().map(|l| (l, 0.0)).collect(),
        }
    }

    fn distribution(&self, eta: f64) -> BTreeMap<ClusterLabel, f64> {
        let top = self.rewards.values().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let weights: BTreeMap<ClusterLabel, f64> =
            self.rewards.iter().map(|(&k, &r)| (k, (eta * (r - top)).exp())).collect();
        super::normalize(weights)
    }

    fn apply_event(&mut self, event: &ClusterEvent, eta: f64) {
        match event {
            ClusterEvent::NewCluster(k) => {
                self.rewards.entry(ClusterLabel::Id(*k)).or_insert(0.0);
            }
            ClusterEvent::Merge { sources, survivor } => {
                // weights add: R = ln(Σ exp(η R_i)) / η
                let merged: Vec<f64> = sources
                    .iter()
                    .filter_map(|&k| self.rewards.remove(&ClusterLabel::Id(k)))
                    .collect();
                let top = merged.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = top + merged.iter().map(|r| (eta * (r - top)).exp()).sum::<f64>().ln() / eta;
                self.rewards.insert(ClusterLabel::Id(*survivor), lse);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpWeightsModel {
    eta: f64,
    global: RewardPool,
    per_source: BTreeMap<ClusterLabel, RewardPool>,
}

impl ExpWeightsModel {
    pub fn new(labels: &[ClusterLabel], eta: f64) -> Self {
        let mut all: Vec<ClusterLabel> = labels.to_vec();
        all.push(ClusterLabel::Outlier);
        all.sort_unstable();
        all.dedup();
        let per_source = all
            .iter()
            .filter(|l| !l.is_outlier())
            .map(|&j| (j, RewardPool::new(all.iter().copied())))
            .collect();
        ExpWeightsModel {
            eta,
            global: RewardPool::new(all),
            per_source,
        }
    }

    pub fn global_rewards(&self) -> &BTreeMap<ClusterLabel, f64> {
        &self.global.rewards
    }

    pub fn source_rewards(&self) -> impl Iterator<Item = (ClusterLabel, &BTreeMap<ClusterLabel, f64>)> + '_ {
        self.per_source.iter().map(|(&k, p)| (k, &p.rewards))
    }

    pub fn predict(&self, source: ClusterLabel) -> Prediction {
        let pool = self.per_source.get(&source).unwrap_or(&self.global);
        let distribution = pool.distribution(self.eta);
        let choice = argmax_non_outlier(distribution.iter().map(|(&k, &p)| (k, p, pool.rewards[&k])));
        Prediction { distribution, choice }
    }

    pub fn update(&mut self, source: ClusterLabel, actual: ClusterLabel, events: &[ClusterEvent]) -> Result<()> {
        for e in events {
            match e {
                ClusterEvent::NewCluster(k) => {
                    let k = ClusterLabel::Id(*k);
                    if self.per_source.contains_key(&k) {
                        return Err(Error::InvalidInput(format!("cluster {k} already exists")));
                    }
                    self.global.apply_event(e, self.eta);
                    for pool in self.per_source.values_mut() {
                        pool.apply_event(e, self.eta);
                    }
                    self.per_source.insert(k, RewardPool::new(self.global.rewards.keys().copied()));
                }
                ClusterEvent::Merge { sources, survivor } => {
                    let labels: Vec<ClusterLabel> = sources.iter().map(|&k| ClusterLabel::Id(k)).collect();
                    if let Some(&missing) = labels.iter().find(|l| !self.per_source.contains_key(l)) {
                        return Err(Error::UnknownLabel(missing));
                    }
                    let mut merged = RewardPool::default();
                    for l in &labels {
                        for (&k, &r) in &self.per_source.remove(l).expect("checked above").rewards {
                            *merged.rewards.entry(k).or_insert(0.0) += r;
                        }
                    }
                    self.per_source.insert(ClusterLabel::Id(*survivor), merged);
                    self.global.apply_event(e, self.eta);
                    for pool in self.per_source.values_mut() {
                        pool.apply_event(e, self.eta);
                    }
                }
            }
        }
        let bump = |pool: &mut RewardPool| -> Result<()> {
            *pool.rewards.get_mut(&actual).ok_or(Error::UnknownLabel(actual))? += 1.0;
            Ok(())
        };
        bump(&mut self.global)?;
        match self.per_source.get_mut(&source) {
            Some(pool) => bump(pool),
            None if source.is_outlier() => Ok(()),
            None => Err(Error::UnknownLabel(source)),
        }
    }
}
