use super::{ClusterLabel, ClusterParams};

/// Source-label assignment from per-cluster distances.
///
/// With two or more clusters the nearest one is returned when the runner-up
/// is more than `delta` times farther away and the nearest lies within
/// `d_max`. A single cluster is returned iff it lies within `d_max`.
pub fn assign_source_label(cluster_distances: &[(u32, f64)], params: &ClusterParams) -> ClusterLabel {
    let mut sorted: Vec<(u32, f64)> = cluster_distances.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    match sorted.as_slice() {
        [] => ClusterLabel::Outlier,
        [(k, d1)] => {
            if *d1 <= params.d_max {
                ClusterLabel::Id(*k)
            } else {
                ClusterLabel::Outlier
            }
        }
        [(k, d1), (_, d2), ..] => {
            // d2 / d1 > delta, written without the division so d1 = 0 is safe
            if *d2 > params.delta * *d1 && *d1 <= params.d_max {
                ClusterLabel::Id(*k)
            } else {
                ClusterLabel::Outlier
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ClusterParams {
        ClusterParams { delta: 2.0, d_max: 500.0, ..Default::default() }
    }

    #[test]
    fn clear_winner_is_assigned() {
        assert_eq!(assign_source_label(&[(0, 50.0), (1, 200.0)], &params()), ClusterLabel::Id(0));
    }

    #[test]
    fn ambiguous_source_is_outlier() {
        assert_eq!(assign_source_label(&[(0, 100.0), (1, 150.0)], &params()), ClusterLabel::Outlier);
    }

    #[test]
    fn ratio_exactly_delta_is_outlier() {
        assert_eq!(assign_source_label(&[(0, 100.0), (1, 200.0)], &params()), ClusterLabel::Outlier);
    }

    #[test]
    fn single_cluster_within_cap() {
        assert_eq!(assign_source_label(&[(0, 80.0)], &params()), ClusterLabel::Id(0));
        assert_eq!(assign_source_label(&[(0, 800.0)], &params()), ClusterLabel::Outlier);
    }

    #[test]
    fn no_clusters() {
        assert_eq!(assign_source_label(&[], &params()), ClusterLabel::Outlier);
    }

    #[test]
    fn far_winner_is_capped() {
        assert_eq!(assign_source_label(&[(2, 600.0), (1, 5000.0)], &params()), ClusterLabel::Outlier);
    }

    #[test]
    fn zero_distances() {
        assert_eq!(assign_source_label(&[(3, 0.0), (1, 40.0)], &params()), ClusterLabel::Id(3));
        assert_eq!(assign_source_label(&[(3, 0.0), (1, 0.0)], &params()), ClusterLabel::Outlier);
    }
}
