//! Online clustering, second variant: one growing centroid per cluster,
//! each with its own radius.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::{haversine_distance, weighted_mean, GeoPoint};

use super::online::{Membership, StreamState};
use super::{ClusterEvent, ClusterLabel, ClusterParams, ClustererSnapshot, Observation, PendingPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidV2 {
    pub label: u32,
    pub center: GeoPoint,
    pub count: u64,
    /// Meters. Only grows, or is replaced by a covering merge.
    pub radius: f64,
}

impl CentroidV2 {
    /// Signed distance from `x` to the centroid disc boundary.
    fn gap(&self, x: GeoPoint) -> f64 {
        haversine_distance(x, self.center) - self.radius
    }
}

#[derive(Clone, Debug)]
pub struct OnlineV2 {
    params: ClusterParams,
    centroids: BTreeMap<u32, CentroidV2>,
    state: StreamState,
}

impl OnlineV2 {
    pub fn new(params: ClusterParams) -> Result<Self> {
        params.validate()?;
        Ok(OnlineV2 {
            params,
            centroids: BTreeMap::new(),
            state: StreamState::default(),
        })
    }

    pub fn centroids(&self) -> impl Iterator<Item = &CentroidV2> {
        self.centroids.values()
    }

    pub fn pending(&self) -> &[PendingPoint] {
        &self.state.pending
    }

    /// argmin over centroids of `distance - radius`; ties go to the smaller label.
    fn nearest_gap(&self, x: GeoPoint) -> Option<(u32, f64)> {
        self.centroids
            .values()
            .map(|c| (c.label, c.gap(x)))
            .fold(None, |best, cur| match best {
                Some((_, g)) if g <= cur.1 => best,
                _ => Some(cur),
            })
    }

    pub fn observe(&mut self, x: GeoPoint, t: f64) -> Result<Observation> {
        self.state.check_time(t)?;
        let eps = self.params.epsilon;
        let index = self.state.members.len();

        let p_x = self.state.touch_neighbors(x, eps);

        let mut candidates = p_x.clone();
        match self.nearest_gap(x) {
            Some((k, gap)) if gap < 0.0 => {
                self.centroids.get_mut(&k).expect("live centroid").count += 1;
                self.state.members.push(Membership::Member(k));
            }
            _ => {
                let centroid_mass: u64 = self
                    .centroids
                    .values()
                    .filter(|c| c.gap(x) < eps)
                    .map(|c| c.count)
                    .sum();
                self.state.pending.push(PendingPoint {
                    index,
                    pos: x,
                    neighbor_count: p_x.len() as u64 + centroid_mass,
                    t,
                });
                self.state.members.push(Membership::Pending);
                candidates.push(index);
            }
        }

        let events = self.update_clusters(candidates);
        self.state.expire(t, self.params.expire);

        Ok(Observation {
            label: self.state.label_of(index),
            events,
        })
    }

    fn update_clusters(&mut self, candidates: Vec<usize>) -> Vec<ClusterEvent> {
        let eps = self.params.epsilon;
        let mut events = Vec::new();

        for index in self.state.upgrade_candidates(candidates, self.params.min_pts) {
            let Some(point) = self.state.take_pending(index) else {
                continue;
            };
            let x = point.pos;

            if let Some((k, gap)) = self.nearest_gap(x) {
                if gap < 0.0 {
                    self.centroids.get_mut(&k).expect("live centroid").count += 1;
                    self.state.members[index] = Membership::Member(k);
                    continue;
                }
            }

            let neighbors: BTreeSet<u32> = self
                .centroids
                .values()
                .filter(|c| c.gap(x) < eps)
                .map(|c| c.label)
                .collect();

            let label = match neighbors.len() {
                0 => {
                    let (label, event) = self.state.labels.fresh();
                    self.centroids.insert(
                        label,
                        CentroidV2 { label, center: x, count: 1, radius: 0.0 },
                    );
                    events.push(event);
                    label
                }
                1 => {
                    let k = *neighbors.iter().next().expect("one label");
                    let c = self.centroids.get_mut(&k).expect("live centroid");
                    c.radius = c.radius.max(haversine_distance(x, c.center));
                    c.count += 1;
                    k
                }
                _ => {
                    let merged: Vec<CentroidV2> = neighbors
                        .iter()
                        .map(|k| self.centroids.remove(k).expect("live centroid"))
                        .collect();
                    let (survivor, event) = self.state.labels.merge(&neighbors);
                    self.centroids.insert(survivor, covering_merge(survivor, &merged, x));
                    events.push(event);
                    survivor
                }
            };
            self.state.members[index] = Membership::Member(label);
        }
        events
    }

    /// Per live label: `max(0, d - radius)`.
    pub fn distances_to_clusters(&self, source: GeoPoint) -> Vec<(u32, f64)> {
        self.centroids
            .values()
            .map(|c| (c.label, c.gap(source).max(0.0)))
            .collect()
    }

    pub fn final_labels(&self) -> Vec<ClusterLabel> {
        self.state.final_labels()
    }

    pub fn live_labels(&self) -> Vec<u32> {
        self.state.labels.live().iter().copied().collect()
    }

    pub fn snapshot(&self) -> ClustererSnapshot {
        ClustererSnapshot::V2 {
            params: self.params,
            centroids: self.centroids.values().cloned().collect(),
            pending: self.state.pending.clone(),
            live_labels: self.live_labels(),
            next_label: self.state.labels.next_label(),
        }
    }
}

/// Count-weighted center of the merged centroids plus the upgrading point
/// (weight 1); the radius covers every merged disc and the point.
fn covering_merge(label: u32, merged: &[CentroidV2], x: GeoPoint) -> CentroidV2 {
    let mut weighted: Vec<(GeoPoint, f64)> = merged.iter().map(|c| (c.center, c.count as f64)).collect();
    weighted.push((x, 1.0));
    let center = weighted_mean(&weighted).expect("non-empty merge");
    let radius = merged
        .iter()
        .map(|c| haversine_distance(center, c.center) + c.radius)
        .fold(haversine_distance(center, x), f64::max);
    CentroidV2 {
        label,
        center,
        count: merged.iter().map(|c| c.count).sum::<u64>() + 1,
        radius,
    }
}
