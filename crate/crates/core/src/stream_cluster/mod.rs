//! Destination clustering: the offline DBSCAN oracle, source-label
//! assignment, and the two online centroid-compressed variants.

mod labels;
mod offline;
mod online;
mod source;
mod v1;
mod v2;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::LabelBook;
pub use offline::{offline_dbscan, DbscanFit};
pub use online::{ClusterSummary, ClustererSnapshot, OnlineClusterer, Variant};
pub use source::assign_source_label;
pub use v1::{CentroidV1, OnlineV1};
pub use v2::{CentroidV2, OnlineV2};

/// Cluster id of a point, or `Outlier` (written as `-1` on the wire).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(into = "i64")]
pub enum ClusterLabel {
    Outlier,
    Id(u32),
}

impl ClusterLabel {
    pub fn is_outlier(self) -> bool {
        matches!(self, ClusterLabel::Outlier)
    }

    pub fn id(self) -> Option<u32> {
        match self {
            ClusterLabel::Outlier => None,
            ClusterLabel::Id(k) => Some(k),
        }
    }
}

impl From<ClusterLabel> for i64 {
    fn from(l: ClusterLabel) -> i64 {
        match l {
            ClusterLabel::Outlier => -1,
            ClusterLabel::Id(k) => i64::from(k),
        }
    }
}

impl TryFrom<i64> for ClusterLabel {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        match v {
            -1 => Ok(ClusterLabel::Outlier),
            k if (0..=i64::from(u32::MAX)).contains(&k) => Ok(ClusterLabel::Id(k as u32)),
            k => Err(format!("invalid cluster label {k}")),
        }
    }
}

// Accepts the string form as well, since JSON object keys are strings.
impl<'de> Deserialize<'de> for ClusterLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LabelVisitor;

        impl serde::de::Visitor<'_> for LabelVisitor {
            type Value = ClusterLabel;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a cluster label (-1 or a non-negative integer)")
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<ClusterLabel, E> {
                ClusterLabel::try_from(v).map_err(E::custom)
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<ClusterLabel, E> {
                i64::try_from(v).map_err(E::custom).and_then(|v| self.visit_i64(v))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<ClusterLabel, E> {
                v.trim().parse::<i64>().map_err(E::custom).and_then(|v| self.visit_i64(v))
            }
        }

        d.deserialize_any(LabelVisitor)
    }
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", i64::from(*self))
    }
}

/// Structural change of the live cluster set caused by one observation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterEvent {
    NewCluster(u32),
    /// `sources` is sorted, has at least two entries and contains `survivor`,
    /// which is always the smallest of them.
    Merge { sources: Vec<u32>, survivor: u32 },
}

impl ClusterEvent {
    /// Where `label` lives after this event.
    pub fn remap(&self, label: ClusterLabel) -> ClusterLabel {
        match (self, label) {
            (ClusterEvent::Merge { sources, survivor }, ClusterLabel::Id(k)) if sources.contains(&k) => {
                ClusterLabel::Id(*survivor)
            }
            _ => label,
        }
    }
}

/// Maps a label through a sequence of events.
pub fn remap_through(events: &[ClusterEvent], label: ClusterLabel) -> ClusterLabel {
    events.iter().fold(label, |l, e| e.remap(l))
}

/// Result of feeding one point to an online clusterer.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Label of the observed point once this call has finished.
    pub label: ClusterLabel,
    /// Structural events in the order they happened.
    pub events: Vec<ClusterEvent>,
}

/// Clustering parameters shared by the offline oracle and both online variants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Neighborhood radius ε in meters.
    pub epsilon: f64,
    /// Minimum number of points (self included) for a dense neighborhood.
    pub min_pts: usize,
    /// Centroid radius as a fraction of ε (V1 only).
    pub radii_fraction: f64,
    /// Source labeling ratio: nearest cluster must be `delta` times closer than the runner-up.
    pub delta: f64,
    /// Pending points older than this many seconds are dropped. `f64::INFINITY` disables expiry.
    #[serde(deserialize_with = "null_as_infinity")]
    pub expire: f64,
    /// Sources farther than this from every cluster are outliers.
    #[serde(deserialize_with = "null_as_infinity")]
    pub d_max: f64,
}

// JSON has no infinity; serde_json writes it as null.
fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            epsilon: 100.0,
            min_pts: 2,
            radii_fraction: 0.5,
            delta: 2.0,
            expire: 28.0 * 86_400.0,
            d_max: 500.0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be a positive number of meters"));
        }
        if self.min_pts < 2 {
            return Err(Error::param("min_pts", "must be at least 2"));
        }
        if !(self.radii_fraction > 0.0 && self.radii_fraction <= 1.0) {
            return Err(Error::param("radii_fraction", "must lie in (0, 1]"));
        }
        if self.delta.is_nan() || self.delta <= 1.0 {
            return Err(Error::param("delta", "must be greater than 1"));
        }
        if self.expire.is_nan() || self.expire <= 0.0 {
            return Err(Error::param("expire", "must be positive (inf disables expiry)"));
        }
        if self.d_max.is_nan() || self.d_max <= 0.0 {
            return Err(Error::param("d_max", "must be positive (inf disables the cap)"));
        }
        Ok(())
    }

    pub(crate) fn centroid_radius(&self) -> f64 {
        self.radii_fraction * self.epsilon
    }
}

/// A destination seen but not yet part of any cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingPoint {
    /// Index of the point in the clusterer's observation order.
    pub index: usize,
    pub pos: crate::geo::GeoPoint,
    pub neighbor_count: u64,
    pub t: f64,
}
