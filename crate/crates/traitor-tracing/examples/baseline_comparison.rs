//! Query-budget comparison: shared fingerprint triggers vs. per-user
//! independent triggers.
//!
//! With independent triggers every user needs their own private queries —
//! six per user at a 1e-6 false-positive target over a 10-class task, so
//! 600 queries for 100 users. With one shared q-ary codebook, a single
//! query stream updates every user's test simultaneously.
//!
//! ```bash
//! cargo run --release --example baseline_comparison
//! ```

use traitor_tracing::harness::{run_experiment, CodeSettings, ExperimentConfig, ExperimentKind};

fn main() -> traitor_tracing::Result<()> {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::BaselineCompare),
        code: CodeSettings {
            m: 1000,
            ..Default::default()
        },
        n_users: 100,
        trials: 50,
        estimation_trials: 150,
        seed: 404,
        ..Default::default()
    };

    let result = run_experiment(&cfg)?;

    let baseline = &result.extras["baseline"];
    let proposed = &result.extras["proposed"];
    println!("independent-trigger baseline:");
    println!(
        "  {} queries per user x {} users = {} total",
        baseline["per_user_queries"], baseline["n_users"], baseline["total_queries"]
    );
    println!(
        "\nshared-trigger sequential test ({} single-leaker trials):",
        cfg.trials
    );
    println!(
        "  total queries: mean {:.1}, worst {}",
        proposed["total_queries_mean"].as_f64().unwrap(),
        proposed["total_queries_max"]
    );
    println!(
        "  cheaper than the baseline in every trial: {}",
        proposed["every_trial_cheaper"]
    );

    let summary = result.aggregates.by_condition.values().next().unwrap();
    println!(
        "  all trials decided: {} accused / {} trials (median t* = {})",
        summary.accused_trials, summary.trials, summary.t_star_median
    );
    Ok(())
}
