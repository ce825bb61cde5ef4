//! Accuse from a recorded transcript instead of live queries.
//!
//! Field investigations often can't query interactively: someone hands you
//! a CSV of `position,symbol` observations from a suspect model. The
//! sequential test replays it in recorded order and reaches the same
//! decision it would have live.
//!
//! ```bash
//! cargo run --release --example transcript_accusation
//! ```

use traitor_tracing::accusation::{
    estimate_score_distributions, random_query_order, run_transcript, sequential_accuse,
    AttackTranscript, SprtConfig,
};
use traitor_tracing::channel::{make_oracle, ChannelModel, CollusionStrategy};
use traitor_tracing::codebook::{generate_codebook, TardosParams};

fn main() -> traitor_tracing::Result<()> {
    let params = TardosParams::new(10, 500, 0.1, 6, 301)?;
    let cb = generate_codebook(&params, 40)?;
    let channel = ChannelModel::new(CollusionStrategy::Interleaving, 0.0)?;
    let dists = estimate_score_distributions(&cb, &channel, 3, 150, 303)?;
    let sprt = SprtConfig::derive(1e-6, 1e-3)?;

    // Colluders 5, 12 and 31 released an interleaved model; record its
    // answers along a random query order.
    let spec = channel.spec(vec![5, 12, 31], 307)?;
    let oracle = make_oracle(&spec, &cb)?;
    let order = random_query_order(params.m, 311);
    let transcript = AttackTranscript::from_oracle(&oracle, &order)?;

    let csv = transcript.to_csv_string();
    println!(
        "transcript: {} recorded queries, first rows:\n{}",
        transcript.len(),
        csv.lines().take(4).collect::<Vec<_>>().join("\n")
    );

    // Replay offline.
    let replayed = AttackTranscript::from_csv_str(&csv)?;
    let outcome = run_transcript(&cb, &dists, &sprt, &replayed)?;
    println!(
        "\nreplayed decision: {} after t*={} queries; accused = {:?}",
        outcome.decision, outcome.t_star, outcome.accused
    );

    // Live run over the same order agrees exactly.
    let live = sequential_accuse(&cb, &dists, &sprt, &oracle, &order)?;
    assert_eq!(live.decision, outcome.decision);
    assert_eq!(live.accused, outcome.accused);
    assert_eq!(live.t_star, outcome.t_star);
    println!("live run over the same order agrees exactly");
    Ok(())
}
