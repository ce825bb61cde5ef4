//! White-box tracing: when the suspect's weights are readable, one
//! projection per user identifies every colluder at once.
//!
//! Each user's weights carry a push along their own direction of a secret
//! orthonormal basis. Averaging c copies scales every colluder's
//! projection towards 1/sqrt(c) while innocents stay near zero, and the
//! signature survives fine-tuning noise and magnitude pruning.
//!
//! ```bash
//! cargo run --release --example whitebox_tracing
//! ```

use traitor_tracing::channel::sample_colluders;
use traitor_tracing::rng::{purpose, substream};
use traitor_tracing::whitebox::{
    accuse_whitebox, attack_finetune, attack_prune, collude_average, default_threshold,
    embed_users, PruneMode, WhiteboxParams,
};

fn main() -> traitor_tracing::Result<()> {
    let params = WhiteboxParams::new(4096, 256, 16, 99)?.with_noise_sigma(0.02)?;
    let ensemble = embed_users(&params)?;
    println!(
        "embedded {} users: l={} p_dim={} beta={}",
        params.n_users,
        params.l,
        params.p_dim,
        ensemble.beta()
    );
    for j in [0, 7] {
        println!(
            "  user {j} own projection: {:.4}",
            ensemble.project(ensemble.weights(j), j)?
        );
    }

    let threshold = default_threshold(6, params.p_dim);
    println!("accusation threshold: {threshold:.4}\n");

    let mut rng = substream(123, &[purpose::COLLUSION_SAMPLE]);
    for c in [2usize, 4, 6] {
        let colluders = sample_colluders(params.n_users, c, &mut rng)?;
        let merged = collude_average(&ensemble, &colluders)?;

        let mut attack_rng = substream(456, &[purpose::WHITEBOX_ATTACK, c as u64]);
        let finetuned = attack_finetune(&merged, 0.1, &mut attack_rng)?;
        let pruned = attack_prune(&merged, 0.8, PruneMode::SmallestMagnitude, &mut attack_rng)?;

        println!(
            "collusion {colluders:?} (ideal projection 1/sqrt({c}) = {:.4})",
            1.0 / (c as f64).sqrt()
        );
        for (label, suspect) in [
            ("merged", &merged),
            ("finetuned", &finetuned),
            ("pruned 80%", &pruned),
        ] {
            let accused = accuse_whitebox(&ensemble, suspect, threshold)?;
            let shown: Vec<String> = accused
                .iter()
                .map(|(j, r)| format!("{j} (r={r:.3})"))
                .collect();
            println!("  {label:<11} accuses: {}", shown.join(", "));
            let caught: Vec<usize> = accused.iter().map(|&(j, _)| j).collect();
            assert!(
                colluders.iter().all(|j| caught.contains(j)),
                "missed a colluder"
            );
        }
        println!();
    }
    println!("all colluders identified under every attack; no innocent implicated");
    Ok(())
}
