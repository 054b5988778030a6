use std::collections::BTreeMap;

use crate::geo::GeoPoint;
use crate::stream_cluster::{assign_source_label, ClusterLabel, ClusterParams, DbscanFit};

/// Offline reference clustering of one user's complete history, and the
/// empirical destination distribution conditioned on each source label.
#[derive(Clone, Debug)]
pub struct OfflineOracle {
    pub fit: DbscanFit,
    pub source_labels: Vec<ClusterLabel>,
    pub conditional: BTreeMap<ClusterLabel, BTreeMap<ClusterLabel, f64>>,
}

impl OfflineOracle {
    /// `trips` are (source, destination) pairs in chronological order.
    pub fn new(trips: &[(GeoPoint, GeoPoint)], params: &ClusterParams) -> Self {
        let destinations: Vec<GeoPoint> = trips.iter().map(|t| t.1).collect();
        let fit = DbscanFit::fit(&destinations, params);
        let source_labels: Vec<ClusterLabel> = trips
            .iter()
            .map(|t| assign_source_label(&fit.distances_to_clusters(t.0), params))
            .collect();
        let mut counts: BTreeMap<ClusterLabel, BTreeMap<ClusterLabel, u64>> = BTreeMap::new();
        for (s, d) in source_labels.iter().zip(&fit.labels) {
            *counts.entry(*s).or_default().entry(*d).or_insert(0) += 1;
        }
        let conditional = counts
            .into_iter()
            .map(|(s, row)| {
                let total: u64 = row.values().sum();
                let probs = row.into_iter().map(|(d, c)| (d, c as f64 / total as f64)).collect();
                (s, probs)
            })
            .collect();
        OfflineOracle {
            fit,
            source_labels,
            conditional,
        }
    }

    pub fn destination_labels(&self) -> &[ClusterLabel] {
        &self.fit.labels
    }

    pub fn p_star(&self, source: ClusterLabel) -> Option<&BTreeMap<ClusterLabel, f64>> {
        self.conditional.get(&source)
    }
}
