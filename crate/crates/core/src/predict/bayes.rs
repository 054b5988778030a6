use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_cluster::{ClusterEvent, ClusterLabel};

use super::{DirichletCategorical, Prediction};

/// Dirichlet concentration used for every label: `global` for the
/// destination distribution, `conditional` for the per-source ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub global: f64,
    pub conditional: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors { global: 1.0, conditional: 1.0 }
    }
}

/// Destination model `p(dest)` plus `p(dest | source)` for every source
/// label, each a Dirichlet-categorical posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesianModel {
    priors: Priors,
    global: DirichletCategorical,
    conditional: BTreeMap<ClusterLabel, DirichletCategorical>,
}

fn with_outlier(labels: &[ClusterLabel]) -> Vec<ClusterLabel> {
    let mut all: Vec<ClusterLabel> = labels.to_vec();
    all.push(ClusterLabel::Outlier);
    all.sort_unstable();
    all.dedup();
    all
}

impl BayesianModel {
    /// Prior-only model over `labels` (Outlier always included).
    pub fn new(labels: &[ClusterLabel], priors: Priors) -> Self {
        let labels = with_outlier(labels);
        let conditional = labels
            .iter()
            .map(|&j| (j, DirichletCategorical::new(labels.iter().copied(), priors.conditional)))
            .collect();
        BayesianModel {
            priors,
            global: DirichletCategorical::new(labels.iter().copied(), priors.global),
            conditional,
        }
    }

    /// Batch posterior from `(source, dest)` transitions.
    pub fn fit_offline(
        labels: &[ClusterLabel],
        transitions: &[(ClusterLabel, ClusterLabel)],
        priors: Priors,
    ) -> Result<Self> {
        let mut model = BayesianModel::new(labels, priors);
        for &(s, d) in transitions {
            model.observe(s, d)?;
        }
        Ok(model)
    }

    pub fn priors(&self) -> Priors {
        self.priors
    }

    pub fn global(&self) -> &DirichletCategorical {
        &self.global
    }

    pub fn conditional(&self, source: ClusterLabel) -> Option<&DirichletCategorical> {
        self.conditional.get(&source)
    }

    pub fn conditionals(&self) -> &BTreeMap<ClusterLabel, DirichletCategorical> {
        &self.conditional
    }

    /// Conditional distribution for a known non-Outlier source, the global
    /// one otherwise.
    pub fn predict(&self, source: ClusterLabel) -> Prediction {
        match source {
            ClusterLabel::Id(_) => self.conditional.get(&source).unwrap_or(&self.global).predict(),
            ClusterLabel::Outlier => self.global.predict(),
        }
    }

    fn observe(&mut self, source: ClusterLabel, dest: ClusterLabel) -> Result<()> {
        let cond = self.conditional.get_mut(&source).ok_or(Error::UnknownLabel(source))?;
        if cond.pseudocount(dest).is_none() {
            return Err(Error::UnknownLabel(dest));
        }
        cond.observe(dest)?;
        self.global.observe(dest)
    }

    /// Rewrites the label space for one clustering event.
    pub fn apply_event(&mut self, event: &ClusterEvent) -> Result<()> {
        match event {
            ClusterEvent::NewCluster(k) => {
                let k = ClusterLabel::Id(*k);
                if self.conditional.contains_key(&k) {
                    return Err(Error::InvalidInput(format!("cluster {k} already exists")));
                }
                self.global.extend(k, self.priors.global)?;
                for cond in self.conditional.values_mut() {
                    cond.extend(k, self.priors.conditional)?;
                }
                let labels: Vec<ClusterLabel> = self.global.labels().collect();
                self.conditional
                    .insert(k, DirichletCategorical::new(labels, self.priors.conditional));
            }
            ClusterEvent::Merge { sources, survivor } => {
                let sources: Vec<ClusterLabel> = sources.iter().map(|&k| ClusterLabel::Id(k)).collect();
                let survivor = ClusterLabel::Id(*survivor);
                if let Some(&missing) = sources.iter().find(|l| !self.conditional.contains_key(l)) {
                    return Err(Error::UnknownLabel(missing));
                }
                self.global.merge(&sources, survivor)?;
                let mut merged: Option<DirichletCategorical> = None;
                for s in &sources {
                    let cond = self.conditional.remove(s).expect("checked above");
                    match merged.as_mut() {
                        Some(m) => m.absorb(&cond),
                        None => merged = Some(cond),
                    }
                }
                self.conditional.insert(survivor, merged.expect("merge has sources"));
                for cond in self.conditional.values_mut() {
                    cond.merge(&sources, survivor)?;
                }
            }
        }
        Ok(())
    }

    /// Sequential update: remap for `events`, then count `source -> dest`.
    pub fn update(&mut self, source: ClusterLabel, dest: ClusterLabel, events: &[ClusterEvent]) -> Result<()> {
        for e in events {
            self.apply_event(e)?;
        }
        self.observe(source, dest)
    }
}
