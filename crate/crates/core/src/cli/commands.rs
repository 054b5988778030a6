use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{
    extract_trips, filter_corpus, generate_synthetic, group_by_user, parse_key_values, read_fixes, read_trips,
    write_trips, ReadReport, SynthCorpus, SynthSpec, UserTruth,
};
use crate::predict::{DirichletCategorical, ExpertPool, Model};
use crate::stream_cluster::ClustererSnapshot;

use super::config::RunConfig;
use super::run::{run_corpus, write_outputs, RunOutput, UserSnapshot};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub fixes: ReadReport,
    pub users_before: usize,
    pub users_after: usize,
    pub trips_before: usize,
    pub trips_after: usize,
}

fn percent(num: usize, den: usize) -> String {
    if den == 0 {
        "n/a".to_string()
    } else {
        format!("{:.1}%", 100.0 * num as f64 / den as f64)
    }
}

impl IngestReport {
    pub fn summary(&self) -> String {
        format!(
            "fix rows: {} ({} skipped)\ntrips kept: {}/{} ({})\nusers kept: {}/{} ({})",
            self.fixes.rows,
            self.fixes.skipped,
            self.trips_after,
            self.trips_before,
            percent(self.trips_after, self.trips_before),
            self.users_after,
            self.users_before,
            percent(self.users_after, self.users_before),
        )
    }
}

/// Raw fixes to filtered trips.
pub fn cmd_ingest(input: &Path, output: &Path, cfg: &RunConfig) -> Result<IngestReport> {
    let (fixes, report) = read_fixes(BufReader::new(File::open(input)?))?;
    let per_user = group_by_user(fixes, |f| &f.user_id, |f| f.t);
    let mut corpus = BTreeMap::new();
    for (user, fixes) in per_user {
        corpus.insert(user, extract_trips(&fixes, &cfg.segment)?);
    }
    let users_before = corpus.len();
    let trips_before = corpus.values().map(Vec::len).sum();
    let kept = filter_corpus(corpus, &cfg.filter);
    if let Some(dir) = output.parent() {
        fs::create_dir_all(dir)?;
    }
    write_trips(File::create(output)?, kept.values().flatten())?;
    Ok(IngestReport {
        fixes: report,
        users_before,
        users_after: kept.len(),
        trips_before,
        trips_after: kept.values().map(Vec::len).sum(),
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    users: &'a BTreeMap<String, UserTruth>,
}

/// Path of the ground-truth file written next to a synthetic trip CSV.
pub fn sidecar_path(trips: &Path) -> PathBuf {
    trips.with_extension("truth.json")
}

/// Synthetic corpus from a key=value spec file, with overrides applied on top.
pub fn cmd_synth(
    spec_path: &Path,
    output: &Path,
    overrides: &[(String, String)],
    seed: Option<u64>,
) -> Result<SynthCorpus> {
    let mut kv = parse_key_values(&fs::read_to_string(spec_path)?)?;
    kv.extend(overrides.iter().cloned());
    let spec = SynthSpec::from_key_values(&kv)?;
    let corpus = generate_synthetic(&spec, seed.unwrap_or(spec.seed))?;
    if let Some(dir) = output.parent() {
        fs::create_dir_all(dir)?;
    }
    write_trips(File::create(output)?, corpus.users.values().flatten())?;
    let sidecar = Sidecar {
        seed: corpus.seed,
        users: &corpus.truth,
    };
    fs::write(sidecar_path(output), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(corpus)
}

/// Runs the experiment on a trip CSV and writes every report into `out_dir`.
pub fn cmd_run(trips: &Path, cfg: &RunConfig, out_dir: &Path) -> Result<(RunOutput, ReadReport)> {
    let (trips, report) = read_trips(BufReader::new(File::open(trips)?))?;
    let corpus = group_by_user(trips, |t| &t.user_id, |t| t.t_start);
    let out = run_corpus(&corpus, cfg)?;
    write_outputs(&out, out_dir)?;
    Ok((out, report))
}

fn fmt_counts<V: std::fmt::Display>(m: &BTreeMap<crate::stream_cluster::ClusterLabel, V>) -> String {
    m.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ")
}

fn dirichlet_lines(out: &mut String, name: &str, d: &DirichletCategorical) {
    let _ = writeln!(out, "  {name}: {}", fmt_counts(d.pseudocounts()));
}

fn pool_lines(out: &mut String, name: &str, p: &ExpertPool) {
    let tallies: BTreeMap<_, String> = p.tallies().iter().map(|(k, t)| (*k, format!("{}/{}", t.z, t.n))).collect();
    let _ = writeln!(out, "  {name}: {}", fmt_counts(&tallies));
}

fn describe_clusterer(out: &mut String, c: &ClustererSnapshot) {
    let variant = match c {
        ClustererSnapshot::V1 { .. } => "v1",
        ClustererSnapshot::V2 { .. } => "v2",
    };
    let clusters = c.clusters();
    let _ = writeln!(out, "variant: {variant}");
    let _ = writeln!(out, "{} clusters", clusters.len());
    if !clusters.is_empty() {
        let _ = writeln!(out, "label\tcentroids\tsize\tradius_m\tlat\tlon");
        for s in &clusters {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.1}\t{:.6}\t{:.6}",
                s.label, s.centroids, s.size, s.radius, s.center.lat, s.center.lon
            );
        }
    }
    let _ = writeln!(out, "pending: {}", c.pending().len());
}

fn describe_model(out: &mut String, m: &Model) {
    let _ = writeln!(out, "model {}", m.kind());
    match m {
        Model::Bayes(b) | Model::Unconditioned(b) | Model::Greedy(b) => {
            dirichlet_lines(out, "global", b.global());
            for (s, d) in b.conditionals() {
                dirichlet_lines(out, &format!("from {s}"), d);
            }
        }
        Model::Expert(e) => {
            pool_lines(out, "global", e.global());
            for (s, p) in e.pools() {
                pool_lines(out, &format!("from {s}"), p);
            }
        }
        Model::ExpWeights(w) => {
            let _ = writeln!(out, "  global: {}", fmt_counts(w.global_rewards()));
            for (s, r) in w.source_rewards() {
                let _ = writeln!(out, "  from {s}: {}", fmt_counts(r));
            }
        }
    }
}

/// Human-readable summary of a snapshot file: either a per-user snapshot
/// written by `run`, or a bare clusterer snapshot.
pub fn cmd_inspect(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path)?;
    let snapshot: UserSnapshot = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(first) => match serde_json::from_str::<ClustererSnapshot>(&text) {
            Ok(c) => UserSnapshot {
                clusterer: Some(c),
                ..Default::default()
            },
            Err(_) => return Err(Error::Json(first)),
        },
    };
    let mut out = String::new();
    if !snapshot.user_id.is_empty() {
        let _ = writeln!(out, "user: {}", snapshot.user_id);
    }
    match &snapshot.clusterer {
        Some(c) => describe_clusterer(&mut out, c),
        None => {
            let _ = writeln!(out, "0 clusters");
        }
    }
    for m in &snapshot.models {
        describe_model(&mut out, m);
    }
    Ok(out)
}
