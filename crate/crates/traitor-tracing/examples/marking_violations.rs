//! Build a custom noisy channel and watch the tracer stay calibrated.
//!
//! A channel can answer with symbols no colluder holds (violation rate
//! rho) and with true labels instead of fingerprints (skew). As long as
//! the score distributions are estimated under the same channel, the
//! sequential test still converges on real colluders.
//!
//! ```bash
//! cargo run --release --example marking_violations
//! ```

use traitor_tracing::accusation::{
    estimate_score_distributions, random_query_order, sequential_accuse, Decision, SprtConfig,
};
use traitor_tracing::channel::{
    make_oracle, measure_ma_violation_rate, sample_colluders, ChannelModel, CollusionStrategy,
};
use traitor_tracing::codebook::{generate_codebook, TardosParams};
use traitor_tracing::rng::{purpose, substream};

fn main() -> traitor_tracing::Result<()> {
    let params = TardosParams::new(10, 800, 0.1, 6, 607)?;
    let cb = generate_codebook(&params, 40)?;

    // Majority merge with a 12% violation rate.
    let channel = ChannelModel::new(CollusionStrategy::Majority, 0.12)?;
    let dists = estimate_score_distributions(&cb, &channel, 4, 200, 613)?;
    let sprt = SprtConfig::derive(1e-6, 1e-3)?;

    let mut rng = substream(617, &[purpose::COLLUSION_SAMPLE]);
    let colluders = sample_colluders(cb.n_users(), 4, &mut rng)?;
    let spec = channel.spec(colluders.clone(), 619)?;

    // Confirm the channel misbehaves at the configured rate.
    let mut mrng = substream(621, &[purpose::ESTIMATION]);
    let measured = measure_ma_violation_rate(&spec, &cb, 20_000, &mut mrng)?;
    println!("configured violation rate 0.120, measured {measured:.4}");

    let oracle = make_oracle(&spec, &cb)?;
    let order = random_query_order(params.m, 627);
    let outcome = sequential_accuse(&cb, &dists, &sprt, &oracle, &order)?;
    println!(
        "colluders {colluders:?} -> decision {} after t*={} queries; accused = {:?}",
        outcome.decision, outcome.t_star, outcome.accused
    );
    assert_eq!(outcome.decision, Decision::Accused);
    assert!(outcome.accused.iter().all(|j| colluders.contains(j)));
    println!("every accusation names a real colluder despite the noise");
    Ok(())
}
