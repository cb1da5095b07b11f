//! `batch` subcommand: a grid of simulation cells, each replicated with
//! paired seeds across strategies, aggregated into a summary table.
//!
//! Outputs (in the chosen directory):
//! - `summary.csv` — one row per (num_robots, num_event_types, failures,
//!   strategy): mean final improvement Q(T)/Q(0), its sample standard
//!   deviation, mean peak improvement max_t Q(t)/Q(0), and the count of
//!   trials behind those statistics.
//! - `trials.jsonl` — one JSON object per trial. Failed trials carry an
//!   `error` field instead of results; the batch keeps going.
//!
//! The seed for cell (N, E, failures) replicate r is derived from the base
//! seed and those coordinates only — never the strategy — so every strategy
//! sees the same worlds and per-replicate comparisons are paired.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hetcov::rng::derive_trial_seed;
use hetcov::simulator::run_trial;
use hetcov::{validate_config, SimConfig, Strategy};

use crate::output::fmt_sig;

fn default_trials_per_cell() -> usize {
    100
}
fn default_gamma1() -> f64 {
    1.0
}
fn default_gamma2() -> f64 {
    0.5
}

/// On-disk description of a batch: the grid axes, replication count, base
/// seed, and the regularization weights shared by every cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSpec {
    /// Team sizes (N axis).
    pub robots: Vec<usize>,
    /// Event-type counts (E axis).
    pub event_types: Vec<usize>,
    /// Failure counts (failures axis).
    pub failures: Vec<usize>,
    /// Strategies compared within each cell.
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_trials_per_cell")]
    pub trials_per_cell: usize,
    pub base_seed: u64,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    /// Output directory; `--out` overrides it, the env-var default fills in
    /// when both are absent.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// One line of `trials.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub num_robots: usize,
    pub num_event_types: usize,
    pub failures: usize,
    pub strategy: Strategy,
    pub replicate: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_improvement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unconverged_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub num_robots: usize,
    pub num_event_types: usize,
    pub failures: usize,
    pub strategy: Strategy,
    pub mean_improvement: f64,
    pub std_improvement: f64,
    pub mean_peak_improvement: f64,
    /// Trials aggregated into the statistics (failed trials are excluded;
    /// they appear only in `trials.jsonl`).
    pub trials: usize,
}

/// In-memory result of a batch, before any files are written.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// One record per trial, in deterministic grid order:
    /// robots → event_types → failures → strategies → replicates.
    pub records: Vec<TrialRecord>,
    /// One row per (N, E, failures, strategy), in the same grid order.
    pub summary: Vec<SummaryRow>,
}

/// Builds the config for one trial of the grid. The derived seed mixes the
/// cell coordinates and replicate but not the strategy (pairing).
pub fn trial_config(
    spec: &BatchSpec,
    num_robots: usize,
    num_event_types: usize,
    failures: usize,
    strategy: Strategy,
    replicate: usize,
) -> SimConfig {
    let seed = derive_trial_seed(
        spec.base_seed,
        &[
            num_robots as u64,
            num_event_types as u64,
            failures as u64,
            replicate as u64,
        ],
    );
    let mut config = SimConfig::new(num_robots, num_event_types, strategy, seed);
    config.gamma1 = spec.gamma1;
    config.gamma2 = spec.gamma2;
    config.failure_count = failures;
    config
}

/// Runs every trial of the grid (in parallel) and aggregates the summary.
/// Individual trial failures become `error` records; only spec-level
/// problems (an invalid derived config) abort the batch.
pub fn run_batch(spec: &BatchSpec) -> anyhow::Result<BatchOutput> {
    let mut configs = Vec::new();
    for &n in &spec.robots {
        for &e in &spec.event_types {
            for &f in &spec.failures {
                for &strategy in &spec.strategies {
                    for r in 0..spec.trials_per_cell {
                        configs.push((trial_config(spec, n, e, f, strategy, r), r));
                    }
                }
            }
        }
    }
    // Surface config problems (e.g. failures ≥ N) before burning compute;
    // each (N, failures) combination repeats, so check one per combination.
    for (config, _) in configs.iter().step_by(spec.trials_per_cell.max(1)) {
        validate_config(config)
            .with_context(|| format!("cell N={} failures={}", config.num_robots, config.failure_count))?;
    }

    let records: Vec<TrialRecord> = configs
        .par_iter()
        .map(|(config, replicate)| {
            let mut record = TrialRecord {
                num_robots: config.num_robots,
                num_event_types: config.num_event_types,
                failures: config.failure_count,
                strategy: config.strategy,
                replicate: *replicate,
                seed: config.seed,
                improvement: None,
                peak_improvement: None,
                unconverged_steps: None,
                error: None,
            };
            match run_trial(config) {
                Ok(result) => {
                    record.improvement = Some(result.improvement);
                    record.peak_improvement = Some(result.peak_improvement);
                    record.unconverged_steps = Some(result.unconverged_steps);
                }
                Err(err) => record.error = Some(err.to_string()),
            }
            record
        })
        .collect();

    Ok(BatchOutput {
        summary: summarize(spec, &records),
        records,
    })
}

/// Aggregates records into summary rows. Statistics are built from sums and
/// counts only, so the result is independent of trial execution order; the
/// sample standard deviation is 0 when fewer than two trials succeeded.
pub fn summarize(spec: &BatchSpec, records: &[TrialRecord]) -> Vec<SummaryRow> {
    #[derive(Default, Clone)]
    struct Accum {
        count: usize,
        sum: f64,
        sum_sq: f64,
        sum_peak: f64,
    }

    let key_of = |n: usize, e: usize, f: usize, s: Strategy| (n, e, f, s.name());
    let mut keys = Vec::new();
    for &n in &spec.robots {
        for &e in &spec.event_types {
            for &f in &spec.failures {
                for &s in &spec.strategies {
                    keys.push((key_of(n, e, f, s), (n, e, f, s)));
                }
            }
        }
    }

    let mut accums: std::collections::HashMap<_, Accum> = keys
        .iter()
        .map(|(key, _)| (*key, Accum::default()))
        .collect();
    for record in records {
        let Some(improvement) = record.improvement else {
            continue;
        };
        let key = key_of(
            record.num_robots,
            record.num_event_types,
            record.failures,
            record.strategy,
        );
        let accum = accums.entry(key).or_default();
        accum.count += 1;
        accum.sum += improvement;
        accum.sum_sq += improvement * improvement;
        accum.sum_peak += record.peak_improvement.unwrap_or(improvement);
    }

    keys.into_iter()
        .map(|(key, (n, e, f, s))| {
            let accum = &accums[&key];
            let count = accum.count;
            let mean = if count > 0 { accum.sum / count as f64 } else { 0.0 };
            let std = if count > 1 {
                ((accum.sum_sq - accum.sum * accum.sum / count as f64) / (count - 1) as f64)
                    .max(0.0)
                    .sqrt()
            } else {
                0.0
            };
            let mean_peak = if count > 0 { accum.sum_peak / count as f64 } else { 0.0 };
            SummaryRow {
                num_robots: n,
                num_event_types: e,
                failures: f,
                strategy: s,
                mean_improvement: mean,
                std_improvement: std,
                mean_peak_improvement: mean_peak,
                trials: count,
            }
        })
        .collect()
}

/// Renders `summary.csv`.
pub fn render_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(
        "num_robots,num_event_types,failures,strategy,mean_improvement,std_improvement,\
         mean_peak_improvement,trials\n",
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.num_robots,
            row.num_event_types,
            row.failures,
            row.strategy.name(),
            fmt_sig(row.mean_improvement),
            fmt_sig(row.std_improvement),
            fmt_sig(row.mean_peak_improvement),
            row.trials,
        );
    }
    out
}

/// Renders `trials.jsonl` (compact, one object per line).
pub fn render_trials_jsonl(records: &[TrialRecord]) -> anyhow::Result<String> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record).context("serializing trial record")?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Loads a batch spec, runs the grid on `jobs` worker threads (all cores
/// when absent), and writes `summary.csv` and `trials.jsonl`.
pub fn cmd_batch(
    spec_path: &Path,
    out_override: Option<&Path>,
    jobs: Option<usize>,
) -> anyhow::Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading batch spec {}", spec_path.display()))?;
    let spec: BatchSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing batch spec {}", spec_path.display()))?;

    let output = match jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("building worker pool")?
            .install(|| run_batch(&spec)),
        None => run_batch(&spec),
    }?;

    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| spec.out_dir.clone())
        .unwrap_or_else(crate::output::default_out_dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let summary_path = out_dir.join("summary.csv");
    let trials_path = out_dir.join("trials.jsonl");
    fs::write(&summary_path, render_summary_csv(&output.summary))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    fs::write(&trials_path, render_trials_jsonl(&output.records)?)
        .with_context(|| format!("writing {}", trials_path.display()))?;

    let errors = output.records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "batch complete: {} trials ({} failed), {} summary rows",
        output.records.len(),
        errors,
        output.summary.len(),
    );
    println!("wrote {} and {}", summary_path.display(), trials_path.display());
    Ok(())
}
