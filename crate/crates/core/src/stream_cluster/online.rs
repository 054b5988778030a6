use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};

use super::{
    CentroidV1, CentroidV2, ClusterLabel, ClusterParams, LabelBook, Observation, OnlineV1, OnlineV2,
    PendingPoint,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Membership {
    Pending,
    Member(u32),
    Expired,
}

/// State shared by both online variants: the pending set, per-point
/// membership and the label book.
#[derive(Clone, Debug, Default)]
pub(crate) struct StreamState {
    pub pending: Vec<PendingPoint>,
    pub members: Vec<Membership>,
    pub labels: LabelBook,
    last_t: Option<f64>,
}

impl StreamState {
    pub fn check_time(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite timestamp {t}")));
        }
        if let Some(last) = self.last_t {
            if t < last {
                return Err(Error::TimeWentBackwards { t, last });
            }
        }
        self.last_t = Some(t);
        Ok(())
    }

    /// Increments the neighbor count of every pending point strictly within
    /// `epsilon` of `x` and returns their point indices.
    pub fn touch_neighbors(&mut self, x: GeoPoint, epsilon: f64) -> Vec<usize> {
        self.pending
            .iter_mut()
            .filter(|s| haversine_distance(x, s.pos) < epsilon)
            .map(|s| {
                s.neighbor_count += 1;
                s.index
            })
            .collect()
    }

    /// Pending points among `indices` that qualify for an upgrade, in
    /// arrival order.
    pub fn upgrade_candidates(&self, mut indices: Vec<usize>, min_pts: usize) -> Vec<usize> {
        indices.sort_unstable();
        indices.dedup();
        let threshold = (min_pts - 1) as u64;
        indices
            .into_iter()
            .filter(|&i| {
                self.pending
                    .iter()
                    .any(|s| s.index == i && s.neighbor_count >= threshold)
            })
            .collect()
    }

    pub fn take_pending(&mut self, index: usize) -> Option<PendingPoint> {
        let pos = self.pending.iter().position(|s| s.index == index)?;
        Some(self.pending.remove(pos))
    }

    pub fn expire(&mut self, t: f64, expire: f64) {
        let members = &mut self.members;
        self.pending.retain(|s| {
            let keep = t - s.t <= expire;
            if !keep {
                members[s.index] = Membership::Expired;
            }
            keep
        });
    }

    pub fn label_of(&self, index: usize) -> ClusterLabel {
        match self.members[index] {
            Membership::Member(l) => ClusterLabel::Id(self.labels.resolve(l)),
            Membership::Pending | Membership::Expired => ClusterLabel::Outlier,
        }
    }

    pub fn final_labels(&self) -> Vec<ClusterLabel> {
        (0..self.members.len()).map(|i| self.label_of(i)).collect()
    }
}

/// Which clustering drives a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Offline,
    V1,
    V2,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "offline" => Ok(Variant::Offline),
            "v1" => Ok(Variant::V1),
            "v2" => Ok(Variant::V2),
            other => Err(Error::Config(format!("unknown clustering variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Offline => "offline",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
        })
    }
}

/// One of the two online clusterers.
#[derive(Clone, Debug)]
pub enum OnlineClusterer {
    V1(OnlineV1),
    V2(OnlineV2),
}

impl OnlineClusterer {
    /// Builds the clusterer for an online variant; `Variant::Offline` has no online form.
    pub fn new(variant: Variant, params: ClusterParams) -> Result<Self> {
        match variant {
            Variant::V1 => Ok(OnlineClusterer::V1(OnlineV1::new(params)?)),
            Variant::V2 => Ok(OnlineClusterer::V2(OnlineV2::new(params)?)),
            Variant::Offline => Err(Error::Config("offline clustering has no online clusterer".into())),
        }
    }

    pub fn observe(&mut self, point: GeoPoint, t: f64) -> Result<Observation> {
        match self {
            OnlineClusterer::V1(c) => c.observe(point, t),
            OnlineClusterer::V2(c) => c.observe(point, t),
        }
    }

    pub fn distances_to_clusters(&self, source: GeoPoint) -> Vec<(u32, f64)> {
        match self {
            OnlineClusterer::V1(c) => c.distances_to_clusters(source),
            OnlineClusterer::V2(c) => c.distances_to_clusters(source),
        }
    }

    /// Current label of every point observed so far, in observation order.
    pub fn final_labels(&self) -> Vec<ClusterLabel> {
        match self {
            OnlineClusterer::V1(c) => c.final_labels(),
            OnlineClusterer::V2(c) => c.final_labels(),
        }
    }

    pub fn live_labels(&self) -> Vec<u32> {
        match self {
            OnlineClusterer::V1(c) => c.live_labels(),
            OnlineClusterer::V2(c) => c.live_labels(),
        }
    }

    pub fn snapshot(&self) -> ClustererSnapshot {
        match self {
            OnlineClusterer::V1(c) => c.snapshot(),
            OnlineClusterer::V2(c) => c.snapshot(),
        }
    }
}

/// Serializable dump of a clusterer's live state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ClustererSnapshot {
    V1 {
        params: ClusterParams,
        centroids: Vec<CentroidV1>,
        pending: Vec<PendingPoint>,
        live_labels: Vec<u32>,
        next_label: u32,
    },
    V2 {
        params: ClusterParams,
        centroids: Vec<CentroidV2>,
        pending: Vec<PendingPoint>,
        live_labels: Vec<u32>,
        next_label: u32,
    },
}

/// Per-cluster numbers shown by `inspect`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub label: u32,
    pub centroids: usize,
    pub size: u64,
    pub center: GeoPoint,
    /// Radius in meters of a disc around `center` covering every centroid disc.
    pub radius: f64,
}

impl ClustererSnapshot {
    pub fn pending(&self) -> &[PendingPoint] {
        match self {
            ClustererSnapshot::V1 { pending, .. } | ClustererSnapshot::V2 { pending, .. } => pending,
        }
    }

    pub fn clusters(&self) -> Vec<ClusterSummary> {
        match self {
            ClustererSnapshot::V1 { params, centroids, live_labels, .. } => {
                let r = params.centroid_radius();
                live_labels
                    .iter()
                    .filter_map(|&label| {
                        let members: Vec<&CentroidV1> = centroids.iter().filter(|c| c.label == label).collect();
                        let weighted: Vec<(GeoPoint, f64)> =
                            members.iter().map(|c| (c.center, c.count as f64)).collect();
                        let center = crate::geo::weighted_mean(&weighted)?;
                        let radius = members
                            .iter()
                            .map(|c| haversine_distance(center, c.center) + r)
                            .fold(0.0, f64::max);
                        Some(ClusterSummary {
                            label,
                            centroids: members.len(),
                            size: members.iter().map(|c| c.count).sum(),
                            center,
                            radius,
                        })
                    })
                    .collect()
            }
            ClustererSnapshot::V2 { centroids, .. } => centroids
                .iter()
                .map(|c| ClusterSummary {
                    label: c.label,
                    centroids: 1,
                    size: c.count,
                    center: c.center,
                    radius: c.radius,
                })
                .collect(),
        }
    }
}
