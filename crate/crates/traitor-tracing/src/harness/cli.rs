//! The `ttrace` command-line interface.
//!
//! Pipeline stages (`gen-codebook`, `estimate-dists`, `accuse`) exchange
//! artifact files; experiment subcommands run a full Monte Carlo campaign
//! from one config. Exit codes: 0 success, 1 configuration/usage error,
//! 2 runtime error.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

use crate::accusation::{
    estimate_score_distributions, load_dists, run_transcript, save_dists, AttackTranscript,
};
use crate::codebook::{generate_codebook, load_codebook, save_codebook};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use crate::harness::experiments::run_with_threads;
use crate::harness::report::write_report;
use crate::rng::derive_seed;

#[derive(Parser)]
#[command(
    name = "ttrace",
    version,
    about = "Collusion-resistant traitor tracing for fingerprinted models",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment recipe (TOML or JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (artifact stages) or directory (experiments).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Aggregate artifact format.
    #[arg(long, global = true, default_value = "json")]
    format: String,

    /// Full-size campaign: m=1000, 500 trials, 100 users.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a codebook from the `[code]` section and write it as JSON.
    GenCodebook,
    /// Estimate score distributions for a codebook under the configured
    /// channel and write them as JSON.
    EstimateDists {
        /// Codebook artifact produced by `gen-codebook`.
        #[arg(long)]
        codebook: PathBuf,
    },
    /// Run the sequential test over a recorded transcript.
    Accuse {
        #[arg(long)]
        codebook: PathBuf,
        /// Score-distribution artifact produced by `estimate-dists`.
        #[arg(long)]
        dists: PathBuf,
        /// CSV of `position,symbol` rows.
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Monte Carlo collusion trials against one channel.
    Simulate,
    /// Decision-time distributions across bias-spread values.
    SweepKappa,
    /// Decision-time distributions across trigger label skew rates.
    TriggerSkew,
    /// Weight-space projection statistics under collusion and attacks.
    Whitebox,
    /// Measured marking-violation rates per channel preset.
    MaTable,
    /// Shared-trigger scheme vs. per-user independent triggers.
    BaselineCompare,
}

/// Salts matching the harness's derived-seed scheme (see experiments.rs).
const SALT_ESTIMATION: u64 = 0x21;
const SALT_SKEW: u64 = 0x23;

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Toml(_)
        | Error::MalformedFile(_)
        | Error::VersionMismatch { .. }
        | Error::InsufficientUsers { .. } => 1,
        _ => 2,
    }
}

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Error::config(format!("cannot read config {}: {io}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.paper_scale {
        cfg.apply_paper_scale();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let format: OutputFormat = cli.format.parse()?;

    let experiment_kind = match &cli.command {
        Command::Simulate => Some(ExperimentKind::Simulate),
        Command::SweepKappa => Some(ExperimentKind::SweepKappa),
        Command::TriggerSkew => Some(ExperimentKind::TriggerSkew),
        Command::Whitebox => Some(ExperimentKind::Whitebox),
        Command::MaTable => Some(ExperimentKind::MaTable),
        Command::BaselineCompare => Some(ExperimentKind::BaselineCompare),
        _ => None,
    };

    match cli.command {
        Command::GenCodebook => {
            let params = cfg.code.to_params(cfg.seed)?;
            let cb = generate_codebook(&params, cfg.n_users)?;
            let path = cli.out.unwrap_or_else(|| PathBuf::from("codebook.json"));
            save_codebook(&cb, &path)?;
            println!(
                "wrote codebook: q={} m={} n_users={} tau={:.6} -> {}",
                params.q,
                params.m,
                cfg.n_users,
                params.tau,
                path.display()
            );
        }
        Command::EstimateDists { codebook } => {
            let cb = load_codebook(&codebook)?;
            let (model, c) = cfg.channel.resolve(
                cb.params.q,
                cb.params.m,
                Some(cfg.code.c0),
                derive_seed(cfg.seed, &[SALT_SKEW, 0]),
            )?;
            let dists = estimate_score_distributions(
                &cb,
                &model,
                c,
                cfg.estimation_trials,
                derive_seed(cfg.seed, &[SALT_ESTIMATION, 0]),
            )?;
            let path = cli.out.unwrap_or_else(|| PathBuf::from("dists.json"));
            save_dists(&dists, &path)?;
            println!(
                "wrote score distributions: {} -> {}",
                dists.channel_descriptor(),
                path.display()
            );
        }
        Command::Accuse {
            codebook,
            dists,
            transcript,
        } => {
            let cb = load_codebook(&codebook)?;
            let dists = load_dists(&dists)?;
            let transcript = AttackTranscript::read_csv(&transcript)?;
            transcript.validate_for(cb.params.q, cb.params.m)?;
            let sprt = cfg.sprt.to_config()?;
            let outcome = run_transcript(&cb, &dists, &sprt, &transcript)?;
            let doc = serde_json::json!({
                "decision": outcome.decision,
                "accused": outcome.accused,
                "t_star": outcome.t_star,
                "queries_available": transcript.len(),
            });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            if let Some(path) = &cli.out {
                std::fs::write(path, &text)?;
            }
            print!("{text}");
        }
        _ => {
            let kind = cfg.resolve_kind(experiment_kind)?;
            cfg.validate()?;
            let result = run_with_threads(&cfg, cli.threads)?;
            let out_dir = cli
                .out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(format!("runs/{kind}")));
            let files = write_report(&result, &out_dir, format)?;
            for (condition, summary) in &result.aggregates.by_condition {
                println!(
                    "{condition}: {} trials, {} accused, {} exonerated, {} undecided, \
                     median t*={}",
                    summary.trials,
                    summary.accused_trials,
                    summary.exonerated_trials,
                    summary.undecided_trials,
                    summary.t_star_median
                );
            }
            for (key, value) in &result.extras {
                println!("{key}: {value}");
            }
            for file in files {
                println!("wrote {}", file.display());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run(["ttrace", "--help"]), 0);
        assert_eq!(run(["ttrace", "--version"]), 0);
        assert_eq!(run(["ttrace", "simulate", "--help"]), 0);
    }

    #[test]
    fn unknown_subcommand_exits_one() {
        assert_eq!(run(["ttrace", "frobnicate"]), 1);
        assert_eq!(run(["ttrace"]), 1);
    }

    #[test]
    fn bad_flag_value_exits_one() {
        assert_eq!(run(["ttrace", "simulate", "--seed", "not-a-number"]), 1);
    }

    #[test]
    fn missing_config_file_exits_one() {
        assert_eq!(
            run(["ttrace", "simulate", "--config", "/nonexistent/x.toml"]),
            1
        );
    }
}
