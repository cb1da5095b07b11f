//! Experiment harness around the `hetcov` library: one-shot trial runs with
//! full position traces, batch grids with paired seeding across strategies,
//! and validation of the iterative weight solver against the exhaustive
//! grid-search oracle.
//!
//! All commands write machine-readable files (CSV/JSON/JSONL) with stable
//! schemas; see the individual modules for formats.

pub mod batch;
pub mod oracle_check;
pub mod output;
pub mod run;
