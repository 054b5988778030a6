//! Follow-the-awake-leader over a growing, merging set of destination
//! experts. Expert `k` always predicts destination `k`; its reward is 1 when
//! the trip ends in `k` and 0 otherwise.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_cluster::{ClusterEvent, ClusterLabel};

use super::{argmax_non_outlier, normalize, Prediction};

/// What to play when no awake expert has any history yet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstainPolicy {
    Abstain,
    /// Uniformly random awake non-Outlier expert (seeded).
    Random,
}

impl std::str::FromStr for AbstainPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abstain" | "none" => Ok(AbstainPolicy::Abstain),
            "random" => Ok(AbstainPolicy::Random),
            other => Err(Error::Config(format!("unknown abstain policy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertTally {
    /// Cumulative reward.
    pub z: u64,
    /// Steps awake.
    pub n: u64,
}

/// All awake experts of one model with their tallies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpertPool {
    experts: BTreeMap<ClusterLabel, ExpertTally>,
}

impl ExpertPool {
    pub fn new(labels: impl IntoIterator<Item = ClusterLabel>) -> Self {
        ExpertPool {
            experts: labels.into_iter().map(|l| (l, ExpertTally::default())).collect(),
        }
    }

    pub fn tally(&self, label: ClusterLabel) -> Option<ExpertTally> {
        self.experts.get(&label).copied()
    }

    pub fn tallies(&self) -> &BTreeMap<ClusterLabel, ExpertTally> {
        &self.experts
    }

    pub fn wake(&mut self, label: ClusterLabel) {
        self.experts.entry(label).or_default();
    }

    /// Survivor gets the summed reward and the longest awake time. After
    /// per-source pools have been added together the summed reward can
    /// exceed that, so `n` is raised to keep `z <= n`.
    pub fn merge(&mut self, sources: &[ClusterLabel], survivor: ClusterLabel) {
        let mut z = 0;
        let mut n = 0;
        for s in sources {
            if let Some(t) = self.experts.remove(s) {
                z += t.z;
                n = n.max(t.n);
            }
        }
        self.experts.insert(survivor, ExpertTally { z, n: n.max(z) });
    }

    /// Expert-wise addition of another pool's tallies.
    pub fn absorb(&mut self, other: &ExpertPool) {
        for (&l, t) in &other.experts {
            let e = self.experts.entry(l).or_default();
            e.z += t.z;
            e.n += t.n;
        }
    }

    /// Every awake expert is charged one step; the one matching `actual` earns 1.
    pub fn reward(&mut self, actual: ClusterLabel) {
        for (&k, t) in self.experts.iter_mut() {
            t.n += 1;
            if k == actual {
                t.z += 1;
            }
        }
    }

    /// The leader among awake non-Outlier experts with history, if any.
    pub fn leader(&self) -> Option<ClusterLabel> {
        argmax_non_outlier(
            self.experts
                .iter()
                .filter(|(_, t)| t.n > 0)
                .map(|(&k, t)| (k, t.z as f64 / t.n as f64, t.z as f64)),
        )
    }

    /// Smoothed averages `(z + κ) / (n + κ·|A|)`, normalized over the awake set.
    pub fn distribution(&self, smoothing: f64) -> BTreeMap<ClusterLabel, f64> {
        let awake = self.experts.len() as f64;
        normalize(
            self.experts
                .iter()
                .map(|(&k, t)| (k, (t.z as f64 + smoothing) / (t.n as f64 + smoothing * awake)))
                .collect(),
        )
    }

    fn apply_event(&mut self, event: &ClusterEvent) {
        match event {
            ClusterEvent::NewCluster(k) => self.wake(ClusterLabel::Id(*k)),
            ClusterEvent::Merge { sources, survivor } => {
                let sources: Vec<ClusterLabel> = sources.iter().map(|&k| ClusterLabel::Id(k)).collect();
                self.merge(&sources, ClusterLabel::Id(*survivor));
            }
        }
    }
}

fn default_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

/// One pool over all trips plus one pool per non-Outlier source label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpertModel {
    global: ExpertPool,
    per_source: BTreeMap<ClusterLabel, ExpertPool>,
    smoothing: f64,
    abstain: AbstainPolicy,
    #[serde(skip, default = "default_rng")]
    rng: ChaCha8Rng,
}

impl ExpertModel {
    pub fn new(labels: &[ClusterLabel], smoothing: f64, abstain: AbstainPolicy, seed: u64) -> Self {
        let mut all: Vec<ClusterLabel> = labels.to_vec();
        all.push(ClusterLabel::Outlier);
        all.sort_unstable();
        all.dedup();
        let per_source = all
            .iter()
            .filter(|l| !l.is_outlier())
            .map(|&j| (j, ExpertPool::new(all.iter().copied())))
            .collect();
        ExpertModel {
            global: ExpertPool::new(all),
            per_source,
            smoothing,
            abstain,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn global(&self) -> &ExpertPool {
        &self.global
    }

    pub fn pool(&self, source: ClusterLabel) -> Option<&ExpertPool> {
        self.per_source.get(&source)
    }

    pub fn pools(&self) -> &BTreeMap<ClusterLabel, ExpertPool> {
        &self.per_source
    }

    fn pool_for(&self, source: ClusterLabel) -> &ExpertPool {
        self.per_source.get(&source).unwrap_or(&self.global)
    }

    pub fn predict(&mut self, source: ClusterLabel) -> Prediction {
        let pool = self.pool_for(source);
        let distribution = pool.distribution(self.smoothing);
        let mut choice = pool.leader();
        if choice.is_none() && self.abstain == AbstainPolicy::Random {
            let awake: Vec<ClusterLabel> = pool.experts.keys().copied().filter(|l| !l.is_outlier()).collect();
            choice = awake.choose(&mut self.rng).copied();
        }
        Prediction { distribution, choice }
    }

    pub fn apply_event(&mut self, event: &ClusterEvent) -> Result<()> {
        match event {
            ClusterEvent::NewCluster(k) => {
                let k = ClusterLabel::Id(*k);
                if self.per_source.contains_key(&k) {
                    return Err(Error::InvalidInput(format!("cluster {k} already exists")));
                }
                self.global.apply_event(event);
                for pool in self.per_source.values_mut() {
                    pool.apply_event(event);
                }
                let fresh = ExpertPool::new(self.global.experts.keys().copied());
                self.per_source.insert(k, fresh);
            }
            ClusterEvent::Merge { sources, survivor } => {
                let labels: Vec<ClusterLabel> = sources.iter().map(|&k| ClusterLabel::Id(k)).collect();
                if let Some(&missing) = labels.iter().find(|l| !self.per_source.contains_key(l)) {
                    return Err(Error::UnknownLabel(missing));
                }
                let mut merged = ExpertPool::default();
                for l in &labels {
                    merged.absorb(&self.per_source.remove(l).expect("checked above"));
                }
                self.per_source.insert(ClusterLabel::Id(*survivor), merged);
                self.global.apply_event(event);
                for pool in self.per_source.values_mut() {
                    pool.apply_event(event);
                }
            }
        }
        Ok(())
    }

    pub fn update(&mut self, source: ClusterLabel, actual: ClusterLabel, events: &[ClusterEvent]) -> Result<()> {
        for e in events {
            self.apply_event(e)?;
        }
        if !self.global.experts.contains_key(&actual) {
            return Err(Error::UnknownLabel(actual));
        }
        self.global.reward(actual);
        if let Some(pool) = self.per_source.get_mut(&source) {
            pool.reward(actual);
        } else if !source.is_outlier() {
            return Err(Error::UnknownLabel(source));
        }
        Ok(())
    }
}
