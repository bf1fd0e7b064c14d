//! Command-line front end for the activity engine.
//!
//! `adl-engine <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--set key=value]...`

pub mod artifacts;
pub mod config;
pub mod stages;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{default_config_with, load_config_with, parse_override, RunConfig};
use crate::stages::out_path;

#[derive(Debug, Parser)]
#[command(
    name = "adl-engine",
    version,
    about = "Activity recognition and next-activity recommendation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized splits; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override any config key, e.g. `--set on_watts=25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a definition file (defaults to the configured one).
    Validate {
        definitions: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Read datasets into occurrences.csv.
    Ingest(Common),
    /// Score occurrences into verdicts.csv.
    Recognize(Common),
    /// Add emotion and UX labels into annotated.csv.
    Affect(Common),
    /// Group start times by activity into clusters.csv.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Label a time of day (HH:MM) by its nearest neighbours.
        #[arg(long)]
        query: Option<String>,
    },
    /// Fit the recommender on the training split.
    Train(Common),
    /// Predict next activities into predictions.csv.
    Recommend {
        #[command(flatten)]
        common: Common,
        /// Feature CSV to predict on (defaults to test_features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Score saved predictions.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Predictions CSV (defaults to predictions.csv).
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run every stage end to end.
    Pipeline(Common),
}

/// Flags beat `--set`, which beats the file, which beats defaults.
fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut overrides = common
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = &common.out {
        overrides.push(("out_dir".into(), out.to_string_lossy().into_owned().into()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.into()));
    }
    match &common.config {
        Some(path) => load_config_with(path, &overrides),
        None => default_config_with(&overrides),
    }
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Validate {
            definitions,
            common,
        } => {
            let cfg = resolve_config(&common)?;
            let path = match definitions {
                Some(p) => p,
                None => cfg.definitions_path()?.to_path_buf(),
            };
            let summary = stages::validate_file(&path)?;
            for f in &summary.failures {
                writeln!(out, "FAIL {f}")?;
            }
            writeln!(out, "{} of {} checks passed", summary.passed, summary.total)?;
            return Ok(summary.ok());
        }
        Command::Ingest(common) => {
            let cfg = resolve_config(&common)?;
            let occ = stages::ingest(&cfg, &stages::load_definitions(&cfg)?)?;
            writeln!(
                out,
                "{} occurrences -> {}",
                occ.len(),
                out_path(&cfg, artifacts::OCCURRENCES).display()
            )?;
        }
        Command::Recognize(common) => {
            let cfg = resolve_config(&common)?;
            let defs = stages::load_definitions(&cfg)?;
            let occ = stages::read_occurrences(&cfg, &defs)?;
            let scored = stages::recognize(&cfg, &defs, &occ)?;
            let done = scored.iter().filter(|(_, v)| v.completed).count();
            writeln!(
                out,
                "{done} of {} completed -> {}",
                scored.len(),
                out_path(&cfg, artifacts::VERDICTS).display()
            )?;
        }
        Command::Affect(common) => {
            let cfg = resolve_config(&common)?;
            let defs = stages::load_definitions(&cfg)?;
            let scored = artifacts::read_verdicts(&out_path(&cfg, artifacts::VERDICTS))?;
            let annotated = stages::affect(&cfg, &defs, &scored)?;
            writeln!(
                out,
                "{} annotated -> {}",
                annotated.len(),
                out_path(&cfg, artifacts::ANNOTATED).display()
            )?;
        }
        Command::Cluster { common, query } => {
            let cfg = resolve_config(&common)?;
            let annotated = artifacts::read_annotated(&out_path(&cfg, artifacts::ANNOTATED))?;
            let report = stages::cluster(&cfg, &annotated)?;
            match query {
                Some(q) => writeln!(out, "{q} -> {}", stages::query_cluster(&cfg, &report, &q)?)?,
                None => writeln!(
                    out,
                    "{} start times over {} activities -> {}",
                    report.len(),
                    report.groups.len(),
                    out_path(&cfg, artifacts::CLUSTERS).display()
                )?,
            }
        }
        Command::Train(common) => {
            let cfg = resolve_config(&common)?;
            let defs = stages::load_definitions(&cfg)?;
            let annotated = artifacts::read_annotated(&out_path(&cfg, artifacts::ANNOTATED))?;
            let t = stages::train_stage(&cfg, &defs, &annotated)?;
            writeln!(
                out,
                "trained on {}, held out {} -> {}",
                t.train.len(),
                t.test.len(),
                out_path(&cfg, artifacts::MODEL).display()
            )?;
        }
        Command::Recommend { common, features } => {
            let cfg = resolve_config(&common)?;
            let model = artifacts::read_json(&out_path(&cfg, artifacts::MODEL))?;
            let path = features.unwrap_or_else(|| out_path(&cfg, artifacts::TEST_FEATURES));
            let preds = stages::recommend_stage(&cfg, &model, &artifacts::read_features(&path)?)?;
            writeln!(
                out,
                "{} predictions -> {}",
                preds.len(),
                out_path(&cfg, artifacts::PREDICTIONS).display()
            )?;
        }
        Command::Evaluate {
            common,
            predictions,
        } => {
            let cfg = resolve_config(&common)?;
            let path = predictions.unwrap_or_else(|| out_path(&cfg, artifacts::PREDICTIONS));
            let (classes, preds) = artifacts::read_predictions(&path)?;
            let report = stages::evaluate(&cfg, &classes, &preds)?;
            writeln!(
                out,
                "accuracy {}",
                adl_core::evaluation::percent(report.accuracy)
            )?;
        }
        Command::Pipeline(common) => {
            let cfg = resolve_config(&common)?;
            let s = stages::pipeline(&cfg)?;
            let reference = s
                .reference_accuracy
                .map(|r| format!(", reference {}", adl_core::evaluation::percent(Some(r))))
                .unwrap_or_default();
            writeln!(
                out,
                "accuracy {} (baseline {}{reference}) -> {}",
                adl_core::evaluation::percent(s.accuracy),
                adl_core::evaluation::percent(s.baseline()),
                cfg.out_dir.display()
            )?;
        }
    }
    Ok(true)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ =
        env_logger::Builder::from_env(env_logger::Env::new().filter("ADL_ENGINE_LOG")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
