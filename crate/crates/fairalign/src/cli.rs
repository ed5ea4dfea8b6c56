//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the report is partial, 2 on any hard
//! failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fairalign_core::ocean::OceanVector;
use fairalign_core::personality::{dominant_traits, BehaviorFeatures, Level};
use fairalign_core::ocean::Trait;
use fairalign_core::tables::{render_checks, verify_tables, PublishedTables};
use log::{error, info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::harness::{build_population, load_dataset, run_evaluation};
use crate::interchange::{dataset_records, write_ndjson};
use crate::report::{emit_report, read_summary};

#[derive(Debug, Parser)]
#[command(name = "fairalign", version, about = "Personalization vs. fairness evaluation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the configured raw dataset and write interchange NDJSON.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer trait vectors for active users and write them as NDJSON.
    Personality {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full evaluation and write the report directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        /// Restrict to these backends (repeatable).
        #[arg(long = "backend")]
        backends: Vec<String>,
        /// Report directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render report files from an existing summary.ndjson.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute FPx from the bundled published metric tables.
    VerifyTables {
        /// Optional config whose `weights` table is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum PersonalityRecord<'a> {
    Personality {
        user_id: &'a str,
        ocean: &'a OceanVector,
        features: &'a BehaviorFeatures,
        dominant: Vec<(Trait, Level)>,
    },
    Excluded {
        user_id: &'a str,
        reason: String,
    },
}

/// Outcome of a command that completed without a hard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let c = RunConfig::load(path)?;
    c.validate()?;
    Ok(c)
}

pub fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Ingest { config, out } => {
            let config = load_config(&config)?;
            let d = load_dataset(&config).context("stage ingest")?;
            for r in &d.reports {
                info!("{}: {} lines, {} malformed", r.source, r.lines, r.malformed.len());
            }
            write_ndjson(create(&out)?, dataset_records(&d))?;
            Ok(Outcome::Complete)
        }
        Command::Personality { config, out } => {
            let config = load_config(&config)?;
            let pop = build_population(&config)?;
            let p = &pop.personalities;
            let threshold = config.personality.dominance_threshold;
            let mut rows = Vec::new();
            for (u, v) in &p.vectors {
                rows.push(PersonalityRecord::Personality {
                    user_id: u,
                    ocean: v,
                    features: &p.features[u],
                    dominant: dominant_traits(v, threshold),
                });
            }
            for (u, e) in &p.excluded {
                rows.push(PersonalityRecord::Excluded {
                    user_id: u,
                    reason: e.to_string(),
                });
            }
            write_ndjson(create(&out)?, rows)?;
            Ok(Outcome::Complete)
        }
        Command::Run {
            config,
            seed,
            k,
            backends,
            out,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(k) = k {
                config.k = k;
            }
            config.select_backends(&backends)?;
            let dir = match out {
                Some(d) => d,
                None => config.resolve(&config.output.dir),
            };
            let report = run_evaluation(&config)?;
            emit_report(&report, &dir).context("stage report")?;
            info!("report written to {}", dir.display());
            for m in &report.missing {
                warn!("missing {} {} user {}: {}", m.backend, m.condition, m.user_id, m.reason);
            }
            Ok(if report.is_partial() {
                Outcome::Partial
            } else {
                Outcome::Complete
            })
        }
        Command::Report { summary, out } => {
            let f = File::open(&summary).with_context(|| format!("opening {}", summary.display()))?;
            let report = read_summary(BufReader::new(f)).with_context(|| format!("in {}", summary.display()))?;
            emit_report(&report, &out)?;
            Ok(if report.is_partial() {
                Outcome::Partial
            } else {
                Outcome::Complete
            })
        }
        Command::VerifyTables { config } => {
            let weights = match config {
                Some(p) => load_config(&p)?.weights,
                None => Default::default(),
            };
            let checks = verify_tables(&PublishedTables::bundled(), &weights);
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(render_checks(&checks).as_bytes())?;
            if checks.iter().all(|c| c.passed()) {
                Ok(Outcome::Complete)
            } else {
                anyhow::bail!("some recomputed FPx values are outside tolerance")
            }
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            warn!("report is PARTIAL");
            ExitCode::from(1)
        }
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
