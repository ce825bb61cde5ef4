//! Configuration-driven Monte Carlo experiment runner.
//!
//! A single [`config::ExperimentConfig`] (TOML or JSON) describes the code
//! parameters, sequential-test settings, collusion channel, and trial
//! counts; [`experiments::run_experiment`] executes the chosen experiment
//! and returns per-trial records plus aggregates, and [`report`] writes
//! them as CSV/JSON artifacts with a provenance header. [`cli`] exposes
//! the whole pipeline as the `ttrace` binary.
//!
//! Every trial derives its random streams from the master seed and the
//! trial index alone, so results are byte-identical regardless of how many
//! worker threads execute them.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod report;

pub use config::{
    ChannelSettings, CodeSettings, ExperimentConfig, ExperimentKind, OutputFormat, RunOptions,
    SprtSettings, WhiteboxAttack, WhiteboxSettings,
};
pub use experiments::{
    aggregate, run_experiment, run_with_threads, Aggregates, ConditionSummary, ExperimentResult,
    Provenance, TrialRecord,
};
pub use report::write_report;
