//! Trigger label skew: what happens when merged models start answering
//! triggers with their true labels instead of fingerprint symbols.
//!
//! A skew rate sigma_s means a fraction of positions carries no
//! fingerprint information at all. Evidence accumulates more slowly, so
//! decision times grow with the rate — the reason trigger inputs should
//! be chosen far from the task distribution.
//!
//! ```bash
//! cargo run --release --example trigger_skew
//! ```

use traitor_tracing::harness::{
    run_experiment, ChannelSettings, CodeSettings, ExperimentConfig, ExperimentKind,
};

fn main() -> traitor_tracing::Result<()> {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::TriggerSkew),
        code: CodeSettings {
            m: 400,
            ..Default::default()
        },
        n_users: 30,
        trials: 40,
        estimation_trials: 150,
        skew_rates: vec![0.0, 0.1, 0.3],
        channel: ChannelSettings {
            c: Some(2),
            ..Default::default()
        },
        seed: 71,
        ..Default::default()
    };

    let result = run_experiment(&cfg)?;

    println!("collusion of 2, {} trials per skew rate\n", cfg.trials);
    println!(
        "{:<12} {:>12} {:>12} {:>12}",
        "condition", "median t*", "mean t*", "undecided"
    );
    for (condition, summary) in &result.aggregates.by_condition {
        println!(
            "{:<12} {:>12} {:>12.1} {:>12}",
            condition, summary.t_star_median, summary.t_star_mean, summary.undecided_trials
        );
    }

    let medians: Vec<f64> = result
        .aggregates
        .by_condition
        .values()
        .map(|s| s.t_star_median)
        .collect();
    if medians.windows(2).all(|w| w[0] <= w[1]) {
        println!("\nmedian decision time grows monotonically with the skew rate");
    }
    Ok(())
}
