use std::path::PathBuf;

use anyhow::bail;
use clap::{Parser, Subcommand};

use hetcov::Strategy;
use hetcov_cli::batch::cmd_batch;
use hetcov_cli::oracle_check::cmd_oracle_check;
use hetcov_cli::output::default_out_dir;
use hetcov_cli::run::{cmd_run, RunOverrides};

/// Heterogeneous multi-robot coverage experiments: single trials, batch
/// grids, and solver-vs-oracle validation.
#[derive(Parser)]
#[command(name = "hetcov", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trial; writes trace.csv and result.json.
    Run {
        /// Trial config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: $HETCOV_OUT_DIR or '.'].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's strategy
        /// (full | baseline | equally_weighted | single_capability).
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Override the config's failure count.
        #[arg(long)]
        failures: Option<usize>,
        /// Override the config's norm-reward weight.
        #[arg(long)]
        gamma1: Option<f64>,
        /// Override the config's temporal-consistency weight.
        #[arg(long)]
        gamma2: Option<f64>,
    },
    /// Run a batch grid; writes summary.csv and trials.jsonl.
    Batch {
        /// Batch spec (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: spec's out_dir, then $HETCOV_OUT_DIR
        /// or '.'].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads [default: all cores].
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the iterative solver against exhaustive grid search on random
    /// small instances; nonzero exit if the ratio thresholds are violated.
    OracleCheck {
        /// Number of random instances.
        #[arg(long, default_value_t = 50)]
        count: u64,
        /// Instance-generation seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Cmd::Run {
            config,
            seed,
            out,
            strategy,
            failures,
            gamma1,
            gamma2,
        } => {
            let overrides = RunOverrides {
                seed,
                strategy,
                failures,
                gamma1,
                gamma2,
            };
            let out = out.unwrap_or_else(default_out_dir);
            cmd_run(&config, &overrides, &out)
        }
        Cmd::Batch { config, out, jobs } => cmd_batch(&config, out.as_deref(), jobs),
        Cmd::OracleCheck { count, seed } => {
            if !cmd_oracle_check(count, seed)? {
                bail!("oracle check thresholds violated");
            }
            Ok(())
        }
    }
}
