use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::stream_cluster::ClusterLabel;

use super::StateMap;

const SUM_TOLERANCE: f64 = 1e-9;

/// Squared Hellinger distance between the oracle distribution and a
/// prediction, split into a part explained by the prediction itself
/// (`h2_d`) and a part caused by the state-space mismatch (`h2_s`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HellingerSplit {
    pub h2: f64,
    pub h2_d: f64,
    pub h2_s: f64,
    /// Predicted mass on online labels that no offline label maps to.
    pub orphan_mass: f64,
}

fn check_normalized(p: &BTreeMap<ClusterLabel, f64>) -> Result<()> {
    let sum: f64 = p.values().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE || p.values().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// `p_star` is over offline labels, `p_pred` over online labels.
pub fn hellinger_split(
    p_star: &BTreeMap<ClusterLabel, f64>,
    p_pred: &BTreeMap<ClusterLabel, f64>,
    map: &StateMap,
) -> Result<HellingerSplit> {
    check_normalized(p_star)?;
    check_normalized(p_pred)?;
    let star = |x: &ClusterLabel| p_star.get(x).copied().unwrap_or(0.0);
    let pred = |y: &ClusterLabel| p_pred.get(y).copied().unwrap_or(0.0);

    let support: BTreeSet<ClusterLabel> = p_star.keys().copied().chain(map.domain()).collect();
    let mut h2 = 0.0;
    let mut grouped: BTreeMap<ClusterLabel, f64> = map.image().map(|y| (y, 0.0)).collect();
    for x in &support {
        match map.get(*x) {
            Some(y) => {
                let share = pred(&y) / map.multiplicity(*x) as f64;
                h2 += (star(x).sqrt() - share.sqrt()).powi(2);
                *grouped.get_mut(&y).expect("image contains every target") += star(x);
            }
            None => h2 += star(x),
        }
    }
    h2 *= 0.5;

    let h2_d = 0.5
        * grouped
            .iter()
            .map(|(y, mass)| (mass.sqrt() - pred(y).sqrt()).powi(2))
            .sum::<f64>();
    let orphan_mass = p_pred
        .iter()
        .filter(|(y, _)| !grouped.contains_key(y))
        .map(|(_, v)| v)
        .sum();

    let mut split = HellingerSplit {
        h2,
        h2_d,
        h2_s: h2 - h2_d,
        orphan_mass,
    };
    if split.h2_s < 0.0 {
        debug_assert!(split.h2_s > -1e-12, "negative state regret {}", split.h2_s);
        split.h2_s = 0.0;
        split.h2_d = split.h2;
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn id(k: u32) -> ClusterLabel {
        ClusterLabel::Id(k)
    }

    fn dist(pairs: &[(ClusterLabel, f64)]) -> BTreeMap<ClusterLabel, f64> {
        pairs.iter().copied().collect()
    }

    fn classical(p: &BTreeMap<ClusterLabel, f64>, q: &BTreeMap<ClusterLabel, f64>) -> f64 {
        let keys: BTreeSet<_> = p.keys().chain(q.keys()).collect();
        0.5 * keys
            .into_iter()
            .map(|k| {
                let a = p.get(k).copied().unwrap_or(0.0);
                let b = q.get(k).copied().unwrap_or(0.0);
                (a.sqrt() - b.sqrt()).powi(2)
            })
            .sum::<f64>()
    }

    #[test]
    fn identity_two_state() {
        let p = dist(&[(id(0), 0.8), (id(1), 0.2)]);
        let q = dist(&[(id(0), 0.5), (id(1), 0.5)]);
        let s = hellinger_split(&p, &q, &StateMap::identity([id(0), id(1)])).unwrap();
        // 0.5 * ((sqrt(.8) - sqrt(.5))^2 + (sqrt(.2) - sqrt(.5))^2)
        assert_abs_diff_eq!(s.h2, 0.051316701949486204, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h2_d, s.h2, epsilon = 1e-15);
        assert_eq!(s.h2_s, 0.0);
    }

    #[test]
    fn merged_states_split_mass() {
        // Two offline clusters collapse onto one online cluster.
        let p = dist(&[(id(0), 0.5), (id(1), 0.5)]);
        let q = dist(&[(id(7), 1.0)]);
        let map = StateMap::from_pairs([(id(0), Some(id(7))), (id(1), Some(id(7)))]);
        let s = hellinger_split(&p, &q, &map).unwrap();
        assert_abs_diff_eq!(s.h2, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.h2_d, 0.0, epsilon = 1e-15);

        let p = dist(&[(id(0), 0.8), (id(1), 0.2)]);
        let s = hellinger_split(&p, &q, &map).unwrap();
        assert_abs_diff_eq!(s.h2, 0.051316701949486204, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h2_d, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.h2_s, s.h2, epsilon = 1e-15);

        let p = dist(&[(id(0), 1.0)]);
        let s = hellinger_split(&p, &q, &map).unwrap();
        let expected = 0.5 * ((1.0 - 0.5f64.sqrt()).powi(2) + 0.5);
        assert_abs_diff_eq!(s.h2, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h2_d, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.h2_s, expected, epsilon = 1e-12);
    }

    #[test]
    fn unmapped_and_orphans() {
        let p = dist(&[(id(0), 0.6), (id(1), 0.4)]);
        let q = dist(&[(id(3), 0.7), (id(9), 0.3)]);
        let map = StateMap::from_pairs([(id(0), Some(id(3))), (id(1), None)]);
        let s = hellinger_split(&p, &q, &map).unwrap();
        let expected_d = 0.5 * (0.6f64.sqrt() - 0.7f64.sqrt()).powi(2);
        assert_abs_diff_eq!(s.h2_d, expected_d, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h2, expected_d + 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.orphan_mass, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn identical_distributions() {
        let p = dist(&[(id(0), 0.3), (id(1), 0.7)]);
        let s = hellinger_split(&p, &p, &StateMap::identity([id(0), id(1)])).unwrap();
        assert_eq!((s.h2, s.h2_d, s.h2_s), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_unnormalized() {
        let p = dist(&[(id(0), 0.6)]);
        let q = dist(&[(id(0), 1.0)]);
        let map = StateMap::identity([id(0)]);
        assert!(matches!(hellinger_split(&p, &q, &map), Err(Error::NotNormalized { .. })));
        assert!(matches!(hellinger_split(&q, &p, &map), Err(Error::NotNormalized { .. })));
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn decomposition_holds(
            p in simplex(6),
            q in simplex(4),
            targets in prop::collection::vec(prop::option::of(0u32..4), 6),
        ) {
            let p_star: BTreeMap<_, _> = p.iter().enumerate().map(|(i, v)| (id(i as u32), *v)).collect();
            let p_pred: BTreeMap<_, _> = q.iter().enumerate().map(|(i, v)| (id(i as u32), *v)).collect();
            let map = StateMap::from_pairs(targets.iter().enumerate().map(|(i, t)| (id(i as u32), t.map(id))));
            let s = hellinger_split(&p_star, &p_pred, &map).unwrap();
            prop_assert!(s.h2_d >= 0.0);
            prop_assert!(s.h2_s >= 0.0);
            prop_assert!(s.h2_d <= s.h2 + 1e-12);
            prop_assert!((s.h2_d + s.h2_s - s.h2).abs() < 1e-12);
            prop_assert!(s.h2 <= 1.0 + 1e-12);
        }

        #[test]
        fn identity_is_classical(p in simplex(5), q in simplex(5)) {
            let a: BTreeMap<_, _> = p.iter().enumerate().map(|(i, v)| (id(i as u32), *v)).collect();
            let b: BTreeMap<_, _> = q.iter().enumerate().map(|(i, v)| (id(i as u32), *v)).collect();
            let s = hellinger_split(&a, &b, &StateMap::identity((0..5).map(id))).unwrap();
            prop_assert!((s.h2 - classical(&a, &b)).abs() < 1e-12);
            prop_assert!((s.h2_d - s.h2).abs() < 1e-12);
            prop_assert!(s.h2_s.abs() < 1e-12);
        }
    }
}
