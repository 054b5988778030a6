//! Online clustering, first variant: clusters are unions of fixed-radius
//! centroids (radius `r·ε`), each carrying a count and a cluster label.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::{haversine_distance, GeoPoint};

use super::online::{Membership, StreamState};
use super::{ClusterEvent, ClusterParams, ClustererSnapshot, Observation, PendingPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidV1 {
    pub center: GeoPoint,
    pub count: u64,
    pub label: u32,
}

#[derive(Clone, Debug)]
pub struct OnlineV1 {
    params: ClusterParams,
    centroids: Vec<CentroidV1>,
    state: StreamState,
}

impl OnlineV1 {
    pub fn new(params: ClusterParams) -> Result<Self> {
        params.validate()?;
        Ok(OnlineV1 {
            params,
            centroids: Vec::new(),
            state: StreamState::default(),
        })
    }

    pub fn params(&self) -> &ClusterParams {
        &self.params
    }

    pub fn centroids(&self) -> &[CentroidV1] {
        &self.centroids
    }

    pub fn pending(&self) -> &[PendingPoint] {
        &self.state.pending
    }

    fn nearest_centroid(&self, x: GeoPoint) -> Option<(usize, f64)> {
        self.centroids
            .iter()
            .enumerate()
            .map(|(q, c)| (q, haversine_distance(x, c.center)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn observe(&mut self, x: GeoPoint, t: f64) -> Result<Observation> {
        self.state.check_time(t)?;
        let eps = self.params.epsilon;
        let r_eps = self.params.centroid_radius();
        let index = self.state.members.len();

        let p_x = self.state.touch_neighbors(x, eps);

        let mut candidates = p_x.clone();
        match self.nearest_centroid(x) {
            Some((q, d)) if d < r_eps => {
                self.centroids[q].count += 1;
                self.state.members.push(Membership::Member(self.centroids[q].label));
            }
            _ => {
                let centroid_mass: u64 = self
                    .centroids
                    .iter()
                    .filter(|c| haversine_distance(x, c.center) < r_eps + eps)
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

        let events = self.check_for_new_centroids(candidates);
        self.state.expire(t, self.params.expire);

        Ok(Observation {
            label: self.state.label_of(index),
            events,
        })
    }

    fn check_for_new_centroids(&mut self, candidates: Vec<usize>) -> Vec<ClusterEvent> {
        let eps = self.params.epsilon;
        let r_eps = self.params.centroid_radius();
        let mut events = Vec::new();

        for index in self.state.upgrade_candidates(candidates, self.params.min_pts) {
            let Some(point) = self.state.take_pending(index) else {
                continue;
            };
            let x = point.pos;

            if let Some((q, d)) = self.nearest_centroid(x) {
                if d < r_eps {
                    self.centroids[q].count += 1;
                    self.state.members[index] = Membership::Member(self.centroids[q].label);
                    continue;
                }
            }

            let neighbor_labels: BTreeSet<u32> = self
                .centroids
                .iter()
                .filter(|c| haversine_distance(x, c.center) < r_eps + eps)
                .map(|c| c.label)
                .collect();

            let label = match neighbor_labels.len() {
                0 => {
                    let (label, event) = self.state.labels.fresh();
                    events.push(event);
                    label
                }
                1 => *neighbor_labels.iter().next().expect("one label"),
                _ => {
                    let (survivor, event) = self.state.labels.merge(&neighbor_labels);
                    for c in &mut self.centroids {
                        if neighbor_labels.contains(&c.label) {
                            c.label = survivor;
                        }
                    }
                    events.push(event);
                    survivor
                }
            };
            self.centroids.push(CentroidV1 { center: x, count: 1, label });
            self.state.members[index] = Membership::Member(label);
        }
        events
    }

    /// Per live label: min over its centroids of `max(0, d - r·ε)`.
    pub fn distances_to_clusters(&self, source: GeoPoint) -> Vec<(u32, f64)> {
        let r_eps = self.params.centroid_radius();
        let mut out: Vec<(u32, f64)> = Vec::new();
        for &label in self.state.labels.live() {
            let d = self
                .centroids
                .iter()
                .filter(|c| c.label == label)
                .map(|c| (haversine_distance(source, c.center) - r_eps).max(0.0))
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                out.push((label, d));
            }
        }
        out
    }

    pub fn final_labels(&self) -> Vec<super::ClusterLabel> {
        self.state.final_labels()
    }

    pub fn live_labels(&self) -> Vec<u32> {
        self.state.labels.live().iter().copied().collect()
    }

    pub fn snapshot(&self) -> ClustererSnapshot {
        ClustererSnapshot::V1 {
            params: self.params,
            centroids: self.centroids.clone(),
            pending: self.state.pending.clone(),
            live_labels: self.live_labels(),
            next_label: self.state.labels.next_label(),
        }
    }
}
