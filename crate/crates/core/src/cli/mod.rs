//! Command-line driver: `ingest`, `synth`, `run` and `inspect`.

mod commands;
mod config;
mod run;
mod session;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::ingest::parse_key_values;

pub use commands::{cmd_ingest, cmd_inspect, cmd_run, cmd_synth, sidecar_path, IngestReport};
pub use config::RunConfig;
pub use run::{
    run_corpus, run_user, write_outputs, Phase, PredictionRecord, RegretCurve, RunOutput, UserResult, UserSnapshot,
};
pub use session::{remap_choice, OfflineSession, OnlineSession, Step};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tripcast", version, about = "Online trip-destination clustering and prediction")]
pub struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment raw GPS fixes into trips and filter the corpus
    Ingest {
        /// CSV with user_id,t,lat,lon,speed_kmh
        input: PathBuf,
        /// Trip CSV to write (default: <out>/trips.csv)
        output: Option<PathBuf>,
    },
    /// Generate a synthetic trip corpus and its ground truth
    Synth {
        /// key=value synthetic corpus spec
        spec: PathBuf,
        /// Trip CSV to write (default: <out>/synth.csv)
        output: Option<PathBuf>,
    },
    /// Cluster, predict and evaluate a trip corpus
    Run {
        /// Trip CSV
        trips: PathBuf,
    },
    /// Summarize a snapshot written by `run --set snapshots=true`
    Inspect { snapshot: PathBuf },
}

fn overrides(set: &[String]) -> Result<Vec<(String, String)>> {
    set.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{s}`")))
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut kv = match &cli.config {
        Some(path) => parse_key_values(&fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?)?,
        None => Default::default(),
    };
    kv.extend(overrides(&cli.set)?);
    if let Some(seed) = cli.seed {
        kv.insert("seed".into(), seed.to_string());
    }
    RunConfig::from_key_values(&kv)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest { input, output } => {
            let cfg = load_config(cli)?;
            let output = output.clone().unwrap_or_else(|| cli.out.join("trips.csv"));
            let report = cmd_ingest(input, &output, &cfg)?;
            println!("{}", report.summary());
        }
        Command::Synth { spec, output } => {
            let output = output.clone().unwrap_or_else(|| cli.out.join("synth.csv"));
            let corpus = cmd_synth(spec, &output, &overrides(&cli.set)?, cli.seed)?;
            let trips: usize = corpus.users.values().map(Vec::len).sum();
            println!("{} users, {} trips -> {}", corpus.users.len(), trips, output.display());
        }
        Command::Run { trips } => {
            let cfg = load_config(cli)?;
            let (out, report) = cmd_run(trips, &cfg, &cli.out)?;
            if report.skipped > 0 {
                eprintln!("warning: skipped {} malformed trip rows", report.skipped);
            }
            for &kind in &cfg.models {
                let a = out.mean_accuracy(kind);
                let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.4}", x));
                println!(
                    "{}/{}: acc_all={} acc_clustered={}",
                    cfg.variant,
                    kind,
                    show(a.acc_all),
                    show(a.acc_clustered)
                );
            }
            println!("reports written to {}", cli.out.display());
        }
        Command::Inspect { snapshot } => print!("{}", cmd_inspect(snapshot)?),
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParam { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}
