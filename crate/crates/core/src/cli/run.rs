use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{
    accuracy, build_state_map, clustering_agreement, hellinger_split, Accuracy, AgreementScores, OfflineOracle,
    RegretAccumulator, RegretRecord, StateMap,
};
use crate::ingest::Trip;
use crate::predict::{Model, ModelConfig, ModelKind};
use crate::stream_cluster::{ClusterLabel, ClustererSnapshot, Variant};

use super::config::RunConfig;
use super::session::{remap_choice, OfflineSession, OnlineSession};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

/// One line of the prediction log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub user_id: String,
    pub model: &'static str,
    pub step: usize,
    pub phase: Phase,
    pub source: ClusterLabel,
    pub actual: ClusterLabel,
    pub choice: Option<ClusterLabel>,
    pub correct: bool,
    pub distribution: BTreeMap<ClusterLabel, f64>,
}

/// Regret of one model on the trips leaving one offline source cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretCurve {
    pub model: ModelKind,
    pub source: ClusterLabel,
    pub records: Vec<RegretRecord>,
}

/// Final per-user state, for `inspect`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSnapshot {
    #[serde(default)]
    pub user_id: String,
    #[serde(default)]
    pub clusterer: Option<ClustererSnapshot>,
    #[serde(default)]
    pub models: Vec<Model>,
}

#[derive(Clone, Debug)]
pub struct UserResult {
    pub user_id: String,
    pub trips: usize,
    pub n_test: usize,
    pub accuracy: Vec<(ModelKind, Accuracy)>,
    pub predictions: Vec<PredictionRecord>,
    pub regret: Vec<RegretCurve>,
    /// (step, scores of the online labels at that step against the oracle)
    pub agreement: Vec<(usize, AgreementScores)>,
    pub final_agreement: Option<AgreementScores>,
    pub snapshot: Option<UserSnapshot>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub users: Vec<UserResult>,
}

impl RunOutput {
    /// Mean over users of each accuracy, skipping users where it is undefined.
    pub fn mean_accuracy(&self, kind: ModelKind) -> Accuracy {
        let mean = |f: fn(&Accuracy) -> Option<f64>| {
            let v: Vec<f64> = self
                .users
                .iter()
                .flat_map(|u| u.accuracy.iter().filter(|(k, _)| *k == kind).filter_map(|(_, a)| f(a)))
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Accuracy {
            acc_all: mean(|a| a.acc_all),
            acc_clustered: mean(|a| a.acc_clustered),
        }
    }

    pub fn curves(&self, kind: ModelKind) -> impl Iterator<Item = (&str, &RegretCurve)> + '_ {
        self.users.iter().flat_map(move |u| {
            u.regret
                .iter()
                .filter(move |c| c.model == kind)
                .map(move |c| (u.user_id.as_str(), c))
        })
    }
}

fn train_size(n: usize, split: f64) -> usize {
    if n < 2 {
        return n;
    }
    ((n as f64 * split).floor() as usize).clamp(1, n - 1)
}

fn model_config(cfg: &RunConfig, user_index: usize) -> ModelConfig {
    ModelConfig {
        seed: cfg.seed.wrapping_add(user_index as u64),
        ..cfg.model
    }
}

fn scores(kinds: &[ModelKind], choices: &[Vec<Option<ClusterLabel>>], actuals: &[ClusterLabel]) -> Result<Vec<(ModelKind, Accuracy)>> {
    kinds
        .iter()
        .zip(choices)
        .map(|(&k, c)| Ok((k, accuracy(c, actuals)?)))
        .collect()
}

fn run_offline(user_id: &str, trips: &[Trip], cfg: &RunConfig, user_index: usize) -> Result<UserResult> {
    let n_train = train_size(trips.len(), cfg.split);
    let kinds = &cfg.models;
    let mut session = OfflineSession::fit(&trips[..n_train], cfg.cluster, kinds, &model_config(cfg, user_index))?;
    let mut choices = vec![Vec::new(); kinds.len()];
    let mut actuals = Vec::new();
    let mut predictions = Vec::new();
    for (step, trip) in trips.iter().enumerate().skip(n_train) {
        let (source, preds, actual) = session.score(trip);
        actuals.push(actual);
        for ((kind, p), c) in kinds.iter().zip(preds).zip(&mut choices) {
            c.push(p.choice);
            predictions.push(PredictionRecord {
                user_id: user_id.to_string(),
                model: kind.name(),
                step,
                phase: Phase::Test,
                source,
                actual,
                choice: p.choice,
                correct: !actual.is_outlier() && p.choice == Some(actual),
                distribution: p.distribution,
            });
        }
    }
    Ok(UserResult {
        user_id: user_id.to_string(),
        trips: trips.len(),
        n_test: actuals.len(),
        accuracy: scores(kinds, &choices, &actuals)?,
        predictions,
        regret: Vec::new(),
        agreement: Vec::new(),
        final_agreement: None,
        snapshot: cfg.snapshots.then(|| UserSnapshot {
            user_id: user_id.to_string(),
            clusterer: None,
            models: session.models().to_vec(),
        }),
    })
}

fn run_online(user_id: &str, trips: &[Trip], cfg: &RunConfig, user_index: usize) -> Result<UserResult> {
    let n = trips.len();
    let n_train = train_size(n, cfg.split);
    let kinds = &cfg.models;
    let pairs: Vec<_> = trips.iter().map(|t| (t.source, t.dest)).collect();
    let oracle = OfflineOracle::new(&pairs, &cfg.cluster);
    let offline_dest = oracle.destination_labels();

    let mut session = OnlineSession::new(cfg.variant, cfg.cluster, kinds, &model_config(cfg, user_index))?;
    let mut state_map = StateMap::default();
    let mut regret: BTreeMap<(usize, ClusterLabel), RegretAccumulator> = BTreeMap::new();
    let mut choices = vec![Vec::new(); kinds.len()];
    let mut actuals = Vec::new();
    let mut predictions = Vec::new();
    let mut agreement = Vec::new();

    for (i, trip) in trips.iter().enumerate() {
        let step = session.step(trip)?;
        let actual = step.observation.label;
        let offline_source = oracle.source_labels[i];
        let p_star = oracle.p_star(offline_source).expect("every trip's source has a row");
        let phase = if i < n_train { Phase::Train } else { Phase::Test };
        if phase == Phase::Test {
            actuals.push(actual);
        }
        for (m, (kind, p)) in kinds.iter().zip(step.predictions).enumerate() {
            let split = hellinger_split(p_star, &p.distribution, &state_map)?;
            regret.entry((m, offline_source)).or_default().push(i, split);
            let choice = remap_choice(p.choice, &step.observation);
            if phase == Phase::Test {
                choices[m].push(choice);
            }
            predictions.push(PredictionRecord {
                user_id: user_id.to_string(),
                model: kind.name(),
                step: i,
                phase,
                source: step.source,
                actual,
                choice: p.choice,
                correct: !actual.is_outlier() && choice == Some(actual),
                distribution: p.distribution,
            });
        }
        // the map used at step i + 1 only sees trips up to i
        let current = session.clusterer().final_labels();
        state_map = build_state_map(&offline_dest[..=i], &current)?;
        if (i + 1) % cfg.agreement_stride == 0 || i + 1 == n {
            agreement.push((i, clustering_agreement(&current, &offline_dest[..=i])?));
        }
    }

    let final_agreement = if n > 0 {
        Some(clustering_agreement(&session.clusterer().final_labels(), offline_dest)?)
    } else {
        None
    };
    Ok(UserResult {
        user_id: user_id.to_string(),
        trips: n,
        n_test: actuals.len(),
        accuracy: scores(kinds, &choices, &actuals)?,
        predictions,
        regret: regret
            .into_iter()
            .map(|((m, source), acc)| RegretCurve {
                model: kinds[m],
                source,
                records: acc.into_records(),
            })
            .collect(),
        agreement,
        final_agreement,
        snapshot: cfg.snapshots.then(|| UserSnapshot {
            user_id: user_id.to_string(),
            clusterer: Some(session.clusterer().snapshot()),
            models: session.models().to_vec(),
        }),
    })
}

/// Runs one user's chronological trip history through the configured pipeline.
pub fn run_user(user_id: &str, trips: &[Trip], cfg: &RunConfig, user_index: usize) -> Result<UserResult> {
    match cfg.variant {
        Variant::Offline => run_offline(user_id, trips, cfg, user_index),
        Variant::V1 | Variant::V2 => run_online(user_id, trips, cfg, user_index),
    }
}

/// Runs every user in parallel; results come back in user order.
pub fn run_corpus(corpus: &BTreeMap<String, Vec<Trip>>, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let users: Vec<(usize, (&String, &Vec<Trip>))> = corpus.iter().enumerate().collect();
    let users = users
        .into_par_iter()
        .map(|(i, (user, trips))| run_user(user, trips, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput {
        config: cfg.clone(),
        users,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    Ok(w)
}

/// Writes the run's reports into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), out.config.to_text())?;
    let kinds = &out.config.models;
    let variant = out.config.variant.to_string();

    let mut w = csv_writer(
        &dir.join("accuracy.csv"),
        &["user_id", "model", "variant", "acc_all", "acc_clustered", "n_test"],
    )?;
    for u in &out.users {
        for (kind, a) in &u.accuracy {
            w.write_record([
                u.user_id.clone(),
                kind.name().to_string(),
                variant.clone(),
                opt(a.acc_all),
                opt(a.acc_clustered),
                u.n_test.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &dir.join("accuracy_summary.csv"),
        &["model", "variant", "users", "mean_acc_all", "mean_acc_clustered"],
    )?;
    for &kind in kinds {
        let a = out.mean_accuracy(kind);
        w.write_record([
            kind.name().to_string(),
            variant.clone(),
            out.users.len().to_string(),
            opt(a.acc_all),
            opt(a.acc_clustered),
        ])?;
    }
    w.flush()?;

    let mut log = BufWriter::new(File::create(dir.join("predictions.jsonl"))?);
    for u in &out.users {
        for p in &u.predictions {
            serde_json::to_writer(&mut log, p)?;
            log.write_all(b"\n")?;
        }
    }
    log.flush()?;

    if out.config.variant != Variant::Offline {
        let header = ["user_id", "step", "ami", "ari", "v_measure"];
        let row = |user: &str, step: usize, s: &AgreementScores| {
            [
                user.to_string(),
                step.to_string(),
                s.ami.to_string(),
                s.ari.to_string(),
                s.v_measure.to_string(),
            ]
        };
        let mut w = csv_writer(&dir.join("agreement.csv"), &header)?;
        for u in &out.users {
            for (step, s) in &u.agreement {
                w.write_record(row(&u.user_id, *step, s))?;
            }
        }
        w.flush()?;
        let mut w = csv_writer(&dir.join("agreement_final.csv"), &header)?;
        for u in &out.users {
            if let Some(s) = &u.final_agreement {
                w.write_record(row(&u.user_id, u.trips.saturating_sub(1), s))?;
            }
        }
        w.flush()?;

        for &kind in kinds {
            let mut w = csv_writer(
                &dir.join(format!("regret_{}.csv", kind.name())),
                &[
                    "user_id", "source_label", "step", "h2", "h2_d", "h2_s", "cum_regret", "cum_h2_d", "cum_h2_s",
                ],
            )?;
            for (user, curve) in out.curves(kind) {
                for r in &curve.records {
                    w.write_record([
                        user.to_string(),
                        curve.source.to_string(),
                        r.step.to_string(),
                        r.h2.to_string(),
                        r.h2_d.to_string(),
                        r.h2_s.to_string(),
                        r.cum_regret.to_string(),
                        r.cum_h2_d.to_string(),
                        r.cum_h2_s.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }

    if out.users.iter().any(|u| u.snapshot.is_some()) {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for u in &out.users {
            if let Some(s) = &u.snapshot {
                let name: String = u
                    .user_id
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                    .collect();
                fs::write(snap_dir.join(format!("{name}.json")), serde_json::to_string_pretty(s)?)?;
            }
        }
    }
    Ok(())
}
