use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stream_cluster::ClusterLabel;

/// Correspondence from offline (oracle) labels to online labels. A label
/// with no entry, or mapped to `None`, is unmapped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateMap {
    map: BTreeMap<ClusterLabel, Option<ClusterLabel>>,
    multiplicity: BTreeMap<ClusterLabel, usize>,
}

impl StateMap {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClusterLabel, Option<ClusterLabel>)>) -> Self {
        let map: BTreeMap<_, _> = pairs.into_iter().collect();
        let mut multiplicity = BTreeMap::new();
        for target in map.values().flatten() {
            *multiplicity.entry(*target).or_insert(0) += 1;
        }
        StateMap { map, multiplicity }
    }

    pub fn identity(labels: impl IntoIterator<Item = ClusterLabel>) -> Self {
        Self::from_pairs(labels.into_iter().map(|l| (l, Some(l))))
    }

    pub fn get(&self, offline: ClusterLabel) -> Option<ClusterLabel> {
        self.map.get(&offline).copied().flatten()
    }

    /// Number of offline labels sharing the image of `offline`.
    pub fn multiplicity(&self, offline: ClusterLabel) -> usize {
        self.get(offline).map_or(0, |t| self.multiplicity[&t])
    }

    pub fn image(&self) -> impl Iterator<Item = ClusterLabel> + '_ {
        self.multiplicity.keys().copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = ClusterLabel> + '_ {
        self.map.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClusterLabel, Option<ClusterLabel>)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }
}

/// Maps each offline label to the online label most of its trips carry.
/// Ties go to the smaller online label; a plurality of online outliers
/// leaves the offline cluster unmapped. The offline outlier class maps to
/// the online outlier class.
pub fn build_state_map(offline: &[ClusterLabel], online: &[ClusterLabel]) -> Result<StateMap> {
    if offline.len() != online.len() {
        return Err(Error::LengthMismatch {
            left: offline.len(),
            right: online.len(),
        });
    }
    let mut votes: BTreeMap<ClusterLabel, BTreeMap<ClusterLabel, usize>> = BTreeMap::new();
    for (&x, &y) in offline.iter().zip(online) {
        *votes.entry(x).or_default().entry(y).or_insert(0) += 1;
    }
    Ok(StateMap::from_pairs(votes.into_iter().map(|(x, counts)| {
        if x.is_outlier() {
            return (x, Some(ClusterLabel::Outlier));
        }
        let mut best = None;
        let mut best_count = 0;
        for (y, c) in counts {
            if c > best_count {
                best = Some(y);
                best_count = c;
            }
        }
        (x, best.filter(|y| !y.is_outlier()))
    })))
}
