//! Catch a single leaker by querying their leaked model trigger by trigger.
//!
//! The leaked copy answers every trigger with the leaker's own fingerprint
//! symbol. The sequential test accumulates log-likelihood evidence per
//! user and usually needs only a few dozen queries — far fewer than the
//! independent-trigger baseline's six private queries per user.
//!
//! ```bash
//! cargo run --release --example trace_single_leaker
//! ```

use traitor_tracing::accusation::{
    baseline_minimal_queries, estimate_score_distributions, random_query_order, sequential_accuse,
    SprtConfig,
};
use traitor_tracing::channel::{make_oracle, ChannelModel, CollusionStrategy};
use traitor_tracing::codebook::{generate_codebook, TardosParams};

fn main() -> traitor_tracing::Result<()> {
    let n_users = 100;
    let params = TardosParams::new(10, 1000, 0.1, 6, 7)?;
    let cb = generate_codebook(&params, n_users)?;

    // Score distributions come from simulated single-user "collusions".
    let channel = ChannelModel::new(CollusionStrategy::Majority, 0.0)?;
    let dists = estimate_score_distributions(&cb, &channel, 1, 200, 11)?;
    println!("estimated distributions: {}", dists.channel_descriptor());

    // User 61 leaks their copy verbatim.
    let leaker = 61;
    let spec = channel.spec(vec![leaker], 13)?;
    let oracle = make_oracle(&spec, &cb)?;

    let sprt = SprtConfig::derive(1e-6, 1e-3)?;
    println!(
        "thresholds: exonerate below a={:.3}, accuse above b={:.3} (log10 scale)",
        sprt.a, sprt.b
    );

    let order = random_query_order(params.m, 17);
    let outcome = sequential_accuse(&cb, &dists, &sprt, &oracle, &order)?;
    println!(
        "decision: {} after t*={} queries; accused = {:?}",
        outcome.decision, outcome.t_star, outcome.accused
    );
    assert_eq!(outcome.accused, vec![leaker]);

    // The baseline embeds private triggers per user and must query each
    // user's triggers separately.
    let per_user = baseline_minimal_queries(1e-6, 0.1)?;
    println!(
        "independent baseline: {per_user} queries/user x {n_users} users = {} total \
         vs {} shared queries here",
        per_user * n_users,
        outcome.t_star
    );
    Ok(())
}
