use std::collections::{BTreeMap, VecDeque};

use crate::geo::{haversine_distance, GeoPoint};

use super::{ClusterLabel, ClusterParams};

/// Offline DBSCAN with the haversine metric.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `epsilon` (inclusive). Clusters are numbered in the input order of
/// their first core point. A border point reachable from several clusters
/// takes the cluster of its lowest-index core neighbor.
pub fn offline_dbscan(points: &[GeoPoint], params: &ClusterParams) -> Vec<ClusterLabel> {
    DbscanFit::fit(points, params).labels
}

/// A fitted offline clustering, kept around for out-of-sample assignment
/// and source-to-cluster distances.
#[derive(Clone, Debug)]
pub struct DbscanFit {
    pub points: Vec<GeoPoint>,
    pub labels: Vec<ClusterLabel>,
    pub core: Vec<bool>,
    epsilon: f64,
}

impl DbscanFit {
    pub fn fit(points: &[GeoPoint], params: &ClusterParams) -> Self {
        let n = points.len();
        let eps = params.epsilon;
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| haversine_distance(points[i], points[j]) <= eps)
                    .collect()
            })
            .collect();
        let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_pts).collect();

        let mut core_label: Vec<Option<u32>> = vec![None; n];
        let mut next = 0u32;
        for start in 0..n {
            if !core[start] || core_label[start].is_some() {
                continue;
            }
            let label = next;
            next += 1;
            core_label[start] = Some(label);
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &j in &neighbors[i] {
                    if core[j] && core_label[j].is_none() {
                        core_label[j] = Some(label);
                        queue.push_back(j);
                    }
                }
            }
        }

        let labels = (0..n)
            .map(|i| {
                if let Some(l) = core_label[i] {
                    return ClusterLabel::Id(l);
                }
                // neighbors are listed in ascending index order
                neighbors[i]
                    .iter()
                    .find_map(|&j| core_label[j])
                    .map_or(ClusterLabel::Outlier, ClusterLabel::Id)
            })
            .collect();

        DbscanFit {
            points: points.to_vec(),
            labels,
            core,
            epsilon: eps,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.iter().filter_map(|l| l.id()).max().map_or(0, |m| m as usize + 1)
    }

    /// Out-of-sample label: the cluster of the nearest core point within ε,
    /// or `Outlier`.
    pub fn assign(&self, p: GeoPoint) -> ClusterLabel {
        self.points
            .iter()
            .zip(&self.core)
            .zip(&self.labels)
            .filter(|((_, &c), _)| c)
            .map(|((&q, _), &l)| (haversine_distance(p, q), l))
            .filter(|(d, _)| *d <= self.epsilon)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(ClusterLabel::Outlier, |(_, l)| l)
    }

    /// Per cluster, the distance from `source` to the nearest member point.
    pub fn distances_to_clusters(&self, source: GeoPoint) -> Vec<(u32, f64)> {
        let mut best: BTreeMap<u32, f64> = BTreeMap::new();
        for (&q, l) in self.points.iter().zip(&self.labels) {
            if let ClusterLabel::Id(k) = l {
                let d = haversine_distance(source, q);
                best.entry(*k).and_modify(|b| *b = b.min(d)).or_insert(d);
            }
        }
        best.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn origin() -> GeoPoint {
        GeoPoint::new(57.7, 11.97).unwrap()
    }

    #[test]
    fn three_close_points_form_one_cluster() {
        let o = origin();
        let pts = [o, o.offset(10.0, 0.0), o.offset(5.0, 8.66)];
        let labels = offline_dbscan(&pts, &ClusterParams::default());
        assert_eq!(labels, vec![ClusterLabel::Id(0); 3]);
    }

    #[test]
    fn isolated_point_is_outlier() {
        assert_eq!(offline_dbscan(&[origin()], &ClusterParams::default()), vec![ClusterLabel::Outlier]);
    }

    #[test]
    fn empty_input() {
        assert!(offline_dbscan(&[], &ClusterParams::default()).is_empty());
    }

    #[test]
    fn border_point_goes_to_first_core_neighbor() {
        // two dense groups, one border point between them (m = 4): the
        // border point sees only itself, a0 and b0
        let o = origin();
        let params = ClusterParams { min_pts: 4, ..Default::default() };
        let a: Vec<GeoPoint> = (0..4).map(|k| o.offset(-10.0 * k as f64, 0.0)).collect();
        let b: Vec<GeoPoint> = (0..4).map(|k| o.offset(190.0 + 10.0 * k as f64, 0.0)).collect();
        let border = o.offset(95.0, 0.0);
        // input order puts cluster B's cores first
        let pts = [b[0], b[1], b[2], border, a[0], a[1], a[2], b[3], a[3]];
        let fit = DbscanFit::fit(&pts, &params);
        assert!(!fit.core[3]);
        assert_eq!(fit.labels[0], ClusterLabel::Id(0));
        assert_eq!(fit.labels[4], ClusterLabel::Id(1));
        // lowest-index core neighbor of the border point is b0
        assert_eq!(fit.labels[3], ClusterLabel::Id(0));
    }

    #[test]
    fn member_distance_is_minimum_over_members() {
        let o = origin();
        let pts = [o, o.offset(10.0, 0.0)];
        let fit = DbscanFit::fit(&pts, &ClusterParams::default());
        let d = fit.distances_to_clusters(o.offset(85.0, 0.0));
        assert_eq!(d.len(), 1);
        assert!((d[0].1 - 75.0).abs() < 0.1, "{:?}", d);
    }

    #[test]
    fn out_of_sample_assignment_uses_core_points() {
        let o = origin();
        let fit = DbscanFit::fit(&[o, o.offset(10.0, 0.0)], &ClusterParams::default());
        assert_eq!(fit.assign(o.offset(60.0, 0.0)), ClusterLabel::Id(0));
        assert_eq!(fit.assign(o.offset(500.0, 0.0)), ClusterLabel::Outlier);
    }
}
