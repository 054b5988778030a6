//! Acceptance suite. Every check prints one PASS/FAIL line; the test fails
//! if any check fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tripcast::cli::{cmd_run, run_corpus, RunConfig, RunOutput};
use tripcast::eval::{clustering_agreement, hellinger_split, quartile_means, StateMap};
use tripcast::ingest::{generate_synthetic, write_trips, SynthSpec, TransitionKind};
use tripcast::predict::{BayesianModel, ModelKind, Priors};
use tripcast::stream_cluster::{offline_dbscan, OnlineV1, Variant};
use tripcast::{haversine_distance, ClusterLabel, ClusterParams, GeoPoint};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let budget = limit.map_or(String::new(), |l| format!(" / limit {:.0}s", l.as_secs_f64()));
    Outcome {
        name,
        passed: ok && in_time,
        detail: format!("{detail} [{:.2}s{budget}]", took.as_secs_f64()),
    }
}

fn id(k: u32) -> ClusterLabel {
    ClusterLabel::Id(k)
}

fn origin() -> GeoPoint {
    GeoPoint::new(57.7, 11.97).unwrap()
}

// ---------------------------------------------------------------------------

fn conjugacy() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = 0;
    for _ in 0..100 {
        let k = rng.random_range(1..8u32);
        let mut labels: Vec<ClusterLabel> = (0..k).map(id).collect();
        labels.push(ClusterLabel::Outlier);
        let n = rng.random_range(0..200);
        let stream: Vec<(ClusterLabel, ClusterLabel)> = (0..n)
            .map(|_| (*labels.choose(&mut rng).unwrap(), *labels.choose(&mut rng).unwrap()))
            .collect();
        let priors = Priors {
            global: rng.random_range(0.0..2.0),
            conditional: rng.random_range(0.0..2.0),
        };
        let batch = BayesianModel::fit_offline(&labels, &stream, priors).unwrap();
        let mut seq = BayesianModel::new(&labels, priors);
        for &(s, d) in &stream {
            seq.update(s, d, &[]).unwrap();
        }
        if seq.global().pseudocounts() != batch.global().pseudocounts() || seq.conditionals() != batch.conditionals() {
            failures += 1;
        }
    }
    (failures == 0, format!("{} of 100 streams differ", failures))
}

/// Squared Hellinger distance and its distributional part, written out
/// directly from the definitions.
fn reference_split(p: &[f64], q: &[f64], target: &[usize]) -> (f64, f64) {
    let mut group_size = vec![0usize; q.len()];
    let mut group_mass = vec![0.0; q.len()];
    for (x, &t) in target.iter().enumerate() {
        group_size[t] += 1;
        group_mass[t] += p[x];
    }
    let h2 = 0.5
        * target
            .iter()
            .enumerate()
            .map(|(x, &t)| (p[x].sqrt() - (q[t] / group_size[t] as f64).sqrt()).powi(2))
            .sum::<f64>();
    let h2_d = 0.5
        * (0..q.len())
            .filter(|&t| group_size[t] > 0)
            .map(|t| (group_mass[t].sqrt() - q[t].sqrt()).powi(2))
            .sum::<f64>();
    (h2, h2_d)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2) + 1e-12).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn state_split_nonnegative() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = f64::INFINITY;
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..10usize);
        let k_online = rng.random_range(1..=k);
        // surjective many-to-one map from k offline states onto k_online states
        let mut target: Vec<usize> = (0..k).map(|x| if x < k_online { x } else { rng.random_range(0..k_online) }).collect();
        target.shuffle(&mut rng);
        let p = random_simplex(&mut rng, k);
        let q = random_simplex(&mut rng, k_online);
        let (h2, h2_d) = reference_split(&p, &q, &target);
        worst = worst.min(h2 - h2_d);

        let p_star = (0..k).map(|x| (id(x as u32), p[x])).collect();
        let p_pred = (0..k_online).map(|t| (id(t as u32), q[t])).collect();
        let map = StateMap::from_pairs((0..k).map(|x| (id(x as u32), Some(id(target[x] as u32)))));
        let s = hellinger_split(&p_star, &p_pred, &map).unwrap();
        if (s.h2 - h2).abs() > 1e-12 || (s.h2_d + s.h2_s - s.h2).abs() > 1e-12 || s.h2_s < 0.0 {
            mismatches += 1;
        }
    }
    (
        worst >= -1e-12 && mismatches == 0,
        format!("min(H2 - H2_d) = {worst:.3e} over 10000 instances, {mismatches} library mismatches"),
    )
}

/// Well-separated planted clusters plus isolated points, in shuffled order.
fn separated_stream(rng: &mut ChaCha8Rng, epsilon: f64) -> Vec<GeoPoint> {
    let centers: Vec<GeoPoint> = (0..5)
        .map(|i| origin().offset(600.0 * (i % 3) as f64, 600.0 * (i / 3) as f64))
        .collect();
    let mut pts = Vec::new();
    for c in &centers {
        for _ in 0..rng.random_range(10..40) {
            // uniform in a 40 m disc: clusters stay > 3ε apart
            let r = 40.0 * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            pts.push(c.offset(r * a.cos(), r * a.sin()));
        }
    }
    let clustered = pts.len();
    while pts.len() < clustered + 10 {
        let p = origin().offset(rng.random_range(-2000.0..4000.0), rng.random_range(-2000.0..3000.0));
        if pts.iter().all(|q| haversine_distance(p, *q) > 3.0 * epsilon) {
            pts.push(p);
        }
    }
    pts.shuffle(rng);
    pts
}

fn incremental_equivalence() -> (bool, String) {
    let params = ClusterParams {
        radii_fraction: 1e-9,
        expire: f64::INFINITY,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 1.0f64;
    for _ in 0..20 {
        let pts = separated_stream(&mut rng, params.epsilon);
        let mut v1 = OnlineV1::new(params).unwrap();
        for (i, p) in pts.iter().enumerate() {
            v1.observe(*p, i as f64 * 60.0).unwrap();
        }
        let offline = offline_dbscan(&pts, &params);
        let ari = clustering_agreement(&v1.final_labels(), &offline).unwrap().ari;
        worst = worst.min(ari);
    }
    (worst == 1.0, format!("min ARI over 20 streams = {worst}"))
}

fn corpus_spec() -> SynthSpec {
    SynthSpec {
        users: 100,
        k_true: 6,
        noise_m: 20.0,
        outlier_prob: 0.1,
        trips_per_user: 200,
        transition: TransitionKind::Random,
        concentration: 0.5,
        seed: 2024,
        ..Default::default()
    }
}

fn config(variant: Variant, models: &[ModelKind]) -> RunConfig {
    RunConfig {
        variant,
        models: models.to_vec(),
        seed: 2024,
        ..Default::default()
    }
}

fn parity(online: &RunOutput, offline: &RunOutput) -> (bool, String) {
    let on = online.mean_accuracy(ModelKind::Bayes).acc_all.unwrap();
    let off = offline.mean_accuracy(ModelKind::Bayes).acc_all.unwrap();
    let gap = 100.0 * (on - off).abs();
    (
        gap <= 3.0,
        format!("v1 {:.2}% vs offline {:.2}%, gap {:.2} points", 100.0 * on, 100.0 * off, gap),
    )
}

/// Final cumulative regret per (user, source cluster) stream with at least
/// `min_trips` steps.
fn final_regret(out: &RunOutput, kind: ModelKind, min_trips: usize) -> BTreeMap<(String, ClusterLabel), f64> {
    out.curves(kind)
        .filter(|(_, c)| !c.source.is_outlier() && c.records.len() >= min_trips)
        .map(|(u, c)| ((u.to_string(), c.source), c.records.last().unwrap().cum_regret))
        .collect()
}

fn regret_dominance(out: &RunOutput) -> (bool, String) {
    let greedy = final_regret(out, ModelKind::Greedy, 40);
    let uncond = final_regret(out, ModelKind::Unconditioned, 40);
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [ModelKind::Bayes, ModelKind::Expert] {
        let ours = final_regret(out, kind, 40);
        let wins = ours.iter().filter(|(k, r)| **r < greedy[*k] && **r < uncond[*k]).count();
        let share = wins as f64 / ours.len().max(1) as f64;
        ok &= !ours.is_empty() && share >= 0.8;
        detail.push(format!("{kind} {wins}/{} ({:.1}%)", ours.len(), 100.0 * share));
    }
    (ok, detail.join(", "))
}

fn sublinearity(out: &RunOutput) -> (bool, String) {
    let streams: Vec<(f64, f64)> = out
        .curves(ModelKind::Bayes)
        .filter(|(_, c)| !c.source.is_outlier() && c.records.len() >= 40)
        .filter_map(|(_, c)| quartile_means(&c.records))
        .collect();
    let below = streams.iter().filter(|(first, last)| last < first).count();
    let share = below as f64 / streams.len().max(1) as f64;
    (
        !streams.is_empty() && share >= 0.9,
        format!("{below}/{} streams ({:.1}%)", streams.len(), 100.0 * share),
    )
}

fn agreement(out: &RunOutput) -> (bool, String) {
    let finals: Vec<_> = out.users.iter().filter_map(|u| u.final_agreement).collect();
    let n = finals.len() as f64;
    let ami = finals.iter().map(|s| s.ami).sum::<f64>() / n;
    let ari = finals.iter().map(|s| s.ari).sum::<f64>() / n;
    let v = finals.iter().map(|s| s.v_measure).sum::<f64>() / n;
    (
        ami >= 0.9 && ari >= 0.9 && v >= 0.9,
        format!("mean AMI {ami:.4}, ARI {ari:.4}, V {v:.4} over {} users", finals.len()),
    )
}

/// Connected components of the core ε-graph via union-find; border points
/// join the component of their lowest-index core neighbor.
fn brute_force_dbscan(points: &[GeoPoint], epsilon: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let adj = |i: usize, j: usize| haversine_distance(points[i], points[j]) <= epsilon;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| adj(i, j)).count() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && adj(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                Some(find(&mut parent, i))
            } else {
                (0..n).find(|&j| core[j] && adj(i, j)).map(|j| find(&mut parent, j))
            }
        })
        .collect()
}

/// Same partition, with outliers fixed, up to renaming of clusters.
fn same_partition(a: &[ClusterLabel], b: &[Option<usize>]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (ClusterLabel::Outlier, None) => true,
        (ClusterLabel::Id(k), Some(c)) => *fwd.entry(*k).or_insert(*c) == *c && *back.entry(*c).or_insert(*k) == *k,
        _ => false,
    })
}

fn oracle_equivalence() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut mismatches = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=200);
        let spread = rng.random_range(200.0..2000.0);
        let params = ClusterParams {
            min_pts: rng.random_range(2..6),
            ..Default::default()
        };
        let pts: Vec<GeoPoint> = (0..n)
            .map(|_| origin().offset(rng.random_range(0.0..spread), rng.random_range(0.0..spread)))
            .collect();
        let labels = offline_dbscan(&pts, &params);
        if !same_partition(&labels, &brute_force_dbscan(&pts, params.epsilon, params.min_pts)) {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{mismatches} of 50 instances differ"))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let corpus = generate_synthetic(&corpus_spec(), corpus_spec().seed).unwrap();
        let trips = tmp.path().join(format!("trips{run}.csv"));
        write_trips(fs::File::create(&trips).unwrap(), corpus.users.values().flatten()).unwrap();
        let out = tmp.path().join(format!("out{run}"));
        cmd_run(&trips, &config(Variant::V1, &ModelKind::ALL), &out).unwrap();
        let mut files = read_dir_bytes(&out);
        files.insert("trips.csv".into(), fs::read(&trips).unwrap());
        outputs.push(files);
    }
    let names: Vec<&String> = outputs[0].keys().collect();
    let differing: Vec<&&String> = names.iter().filter(|n| outputs[1].get(**n) != outputs[0].get(**n)).collect();
    (
        differing.is_empty() && outputs[0].len() == outputs[1].len(),
        format!("{} files compared, differing: {:?}", names.len(), differing),
    )
}

#[test]
fn acceptance_suite() {
    let secs = Duration::from_secs;
    let mut results = vec![
        check("conjugacy: sequential updates equal the batch posterior", Some(secs(1)), conjugacy),
        check("state-space split: H2 - H2_d >= -1e-12", Some(secs(5)), state_split_nonnegative),
        check("r -> 0: V1 reproduces offline DBSCAN (ARI = 1)", Some(secs(10)), incremental_equivalence),
    ];

    let start = Instant::now();
    let corpus = generate_synthetic(&corpus_spec(), corpus_spec().seed).unwrap();
    let online = run_corpus(&corpus.users, &config(Variant::V1, &ModelKind::ALL)).unwrap();
    let offline = run_corpus(&corpus.users, &config(Variant::Offline, &[ModelKind::Bayes])).unwrap();
    let corpus_time = start.elapsed();
    let mut p = check("online/offline accuracy parity within 3 points", None, || parity(&online, &offline));
    p.passed &= corpus_time <= secs(60);
    p.detail = format!("{} [corpus runs {:.2}s / limit 60s]", p.detail, corpus_time.as_secs_f64());
    results.push(p);
    results.push(check("regret: bayes and expert beat greedy and unconditioned", None, || {
        regret_dominance(&online)
    }));
    results.push(check("sublinear regret: last quartile below first", None, || sublinearity(&online)));
    results.push(check("final V1 agreement with the offline oracle >= 0.9", None, || agreement(&online)));
    results.push(check("offline DBSCAN matches the brute-force ε-graph oracle", None, oracle_equivalence));
    results.push(check("determinism: repeated run is byte-identical", None, determinism));

    println!();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
