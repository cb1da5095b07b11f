//! `run` subcommand: one seeded trial, written out as a per-step trace and a
//! self-contained result record.
//!
//! Outputs (in the chosen directory):
//! - `trace.csv` — columns `t,robot_id,x,y,alive,q_total`, one row per robot
//!   per step (dead robots keep appearing with `alive` = 0 and their frozen
//!   position), (T+1)·N rows total.
//! - `result.json` — the trial result (quality trace, improvement ratios,
//!   failure schedule, full config echo), the generated event sources, and
//!   the strategy name.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use hetcov::fields::{generate_events, EventField};
use hetcov::rng::{stream_rng, Stream};
use hetcov::simulator::{run_trial_recorded, TraceRow};
use hetcov::{validate_config, SimConfig, Strategy, TrialResult};

use crate::output::fmt_sig;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub strategy: Option<Strategy>,
    pub failures: Option<usize>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

/// Everything `result.json` records about a trial. The event sources are
/// regenerated from the seed's placement stream, so the file stands alone:
/// together with the embedded config it fully determines the run.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub strategy: &'static str,
    pub result: TrialResult,
    pub sources: Vec<EventField>,
}

/// Loads the config, applies overrides, runs one recorded trial, and writes
/// `trace.csv` and `result.json` into `out_dir`.
pub fn cmd_run(config_path: &Path, overrides: &RunOverrides, out_dir: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let mut config: SimConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", config_path.display()))?;

    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(strategy) = overrides.strategy {
        config.strategy = strategy;
    }
    if let Some(failures) = overrides.failures {
        config.failure_count = failures;
    }
    if let Some(gamma1) = overrides.gamma1 {
        config.gamma1 = gamma1;
    }
    if let Some(gamma2) = overrides.gamma2 {
        config.gamma2 = gamma2;
    }

    let validated = validate_config(&config)?;
    for warning in &validated.warnings {
        eprintln!("warning: {warning}");
    }
    let config = validated.config;

    let (result, trace) = run_trial_recorded(&config)?;
    let record = RunRecord {
        strategy: config.strategy.name(),
        sources: generate_events(&config, &mut stream_rng(config.seed, Stream::EventPlacement)),
        result,
    };

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let trace_path = out_dir.join("trace.csv");
    let result_path = out_dir.join("result.json");
    fs::write(&trace_path, render_trace_csv(&trace))
        .with_context(|| format!("writing {}", trace_path.display()))?;
    fs::write(&result_path, render_result_json(&record)?)
        .with_context(|| format!("writing {}", result_path.display()))?;

    println!(
        "trial seed {} strategy {}: improvement {:.4}, peak {:.4} ({} unconverged steps)",
        config.seed,
        config.strategy.name(),
        record.result.improvement,
        record.result.peak_improvement,
        record.result.unconverged_steps,
    );
    println!("wrote {} and {}", trace_path.display(), result_path.display());
    Ok(())
}

/// Renders the trace rows as CSV. `alive` is written as 1/0 so the file
/// loads directly into numeric tooling.
pub fn render_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str("t,robot_id,x,y,alive,q_total\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.t,
            row.robot_id,
            fmt_sig(row.x),
            fmt_sig(row.y),
            row.alive as u8,
            fmt_sig(row.q_total),
        );
    }
    out
}

/// Renders `result.json` (pretty-printed, full float precision).
pub fn render_result_json(record: &RunRecord) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(record).context("serializing result.json")?;
    text.push('\n');
    Ok(text)
}
