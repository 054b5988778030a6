//! The online pipeline only sees the past: whatever happens after trip i
//! cannot change what was predicted at trip i.

use tripcast::cli::{run_user, OnlineSession, RunConfig};
use tripcast::ingest::{generate_synthetic, SynthSpec, Trip};
use tripcast::predict::{ModelConfig, ModelKind};
use tripcast::stream_cluster::{ClusterParams, Variant};
use tripcast::GeoPoint;

fn user_trips() -> Vec<Trip> {
    let spec = SynthSpec {
        users: 1,
        trips_per_user: 150,
        ..Default::default()
    };
    generate_synthetic(&spec, 77).unwrap().users.into_values().next().unwrap()
}

/// Same trips up to `keep`, then destinations scattered far away.
fn rewrite_future(trips: &[Trip], keep: usize) -> Vec<Trip> {
    let far = GeoPoint::new(-33.9, 151.2).unwrap();
    trips
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i < keep {
                t.clone()
            } else {
                Trip {
                    dest: far.offset(37.0 * i as f64, 0.0),
                    ..t.clone()
                }
            }
        })
        .collect()
}

#[test]
fn session_predictions_ignore_future_trips() {
    let trips = user_trips();
    for variant in [Variant::V1, Variant::V2] {
        for keep in [0, 1, 20, 75, 149] {
            let altered = rewrite_future(&trips, keep);
            let mut a = OnlineSession::new(variant, ClusterParams::default(), &ModelKind::ALL, &ModelConfig::default()).unwrap();
            let mut b = a.clone();
            // step `keep` still predicts before its destination is revealed
            for i in 0..=keep.min(trips.len() - 1) {
                let sa = a.step(&trips[i]).unwrap();
                let sb = b.step(&altered[i]).unwrap();
                assert_eq!(sa.source, sb.source, "{variant} step {i}");
                assert_eq!(sa.predictions, sb.predictions, "{variant} step {i}");
            }
        }
    }
}

#[test]
fn run_user_prefix_matches_full_run() {
    let trips = user_trips();
    let cfg = RunConfig {
        variant: Variant::V1,
        ..Default::default()
    };
    let full = run_user("u", &trips, &cfg, 0).unwrap();
    let prefix = run_user("u", &trips[..90], &cfg, 0).unwrap();
    let key = |r: &tripcast::cli::PredictionRecord| (r.step, r.model, r.source, r.actual, r.choice, r.distribution.clone());
    let a: Vec<_> = full.predictions.iter().filter(|r| r.step < 90).map(key).collect();
    let b: Vec<_> = prefix.predictions.iter().map(key).collect();
    assert_eq!(a, b);
}

#[test]
fn offline_mode_scores_only_held_out_trips() {
    let trips = user_trips();
    let cfg = RunConfig {
        variant: Variant::Offline,
        models: vec![ModelKind::Bayes],
        ..Default::default()
    };
    let r = run_user("u", &trips, &cfg, 0).unwrap();
    assert_eq!(r.n_test, 30);
    assert!(r.predictions.iter().all(|p| p.step >= 120));
    // predictions are frozen after training
    let first = &r.predictions[0];
    let same_source: Vec<_> = r.predictions.iter().filter(|p| p.source == first.source).collect();
    assert!(same_source.iter().all(|p| p.distribution == first.distribution));
}

#[test]
fn uniform_transitions_cap_accuracy_at_one_in_k() {
    use tripcast::cli::run_corpus;
    use tripcast::ingest::TransitionKind;
    let spec = SynthSpec {
        users: 20,
        k_true: 3,
        noise_m: 20.0,
        outlier_prob: 0.0,
        trips_per_user: 300,
        transition: TransitionKind::Uniform,
        ..Default::default()
    };
    let corpus = generate_synthetic(&spec, 11).unwrap().users;
    let cfg = RunConfig {
        variant: Variant::Offline,
        models: vec![ModelKind::Bayes],
        ..Default::default()
    };
    let out = run_corpus(&corpus, &cfg).unwrap();
    let acc = out.mean_accuracy(ModelKind::Bayes).acc_clustered.unwrap();
    assert!((acc - 1.0 / 3.0).abs() < 0.05, "{acc}");
}
