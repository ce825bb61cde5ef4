//! Generate a fingerprinting codebook and inspect its structure.
//!
//! Every user receives a column of q-ary symbols, one per trigger input.
//! Symbols are drawn from per-position bias vectors sampled from a
//! cutoff-restricted Dirichlet, so no symbol is ever too rare to catch a
//! colluder by.
//!
//! ```bash
//! cargo run --release --example generate_codebook
//! ```

use traitor_tracing::codebook::{
    derive_tau, generate_codebook, load_codebook, save_codebook, TardosParams,
};

fn main() -> traitor_tracing::Result<()> {
    // The cutoff depends only on the designed collusion size and the bias
    // spread; at the reference configuration it is about 0.038.
    let tau = derive_tau(6, 0.1)?;
    println!("cutoff for c0=6, kappa=0.1: tau = {tau:.6}");

    // Desk-scale codebook: alphabet 10, 200 trigger positions, 20 users.
    let params = TardosParams::new(10, 200, 0.1, 6, 42)?;
    let cb = generate_codebook(&params, 20)?;
    println!(
        "codebook: q={} m={} users={} (bias cutoff [{:.4}, {:.4}])",
        params.q,
        params.m,
        cb.n_users(),
        params.tau,
        params.cutoff_upper()
    );

    // Bias vectors are probability vectors with every component >= tau.
    let row = cb.bias.row(0);
    let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "position 0 bias: min={min:.4} max={max:.4} sum={:.6}",
        row.iter().sum::<f64>()
    );

    // The cutoff keeps rows usable: even at a spiky spread the dominant
    // symbol's average share stays moderate.
    let mean_max: f64 = (0..params.m)
        .map(|i| cb.bias.row(i).iter().cloned().fold(0.0, f64::max))
        .sum::<f64>()
        / params.m as f64;
    println!(
        "average largest symbol mass per position: {mean_max:.3} (uniform would be {:.3})",
        1.0 / params.q as f64
    );

    // User 0's fingerprint, first twenty symbols.
    let code = cb.fingerprints.code(0);
    let prefix: Vec<String> = code.iter().take(20).map(|s| s.to_string()).collect();
    println!("user 0 fingerprint prefix: {}", prefix.join(" "));

    // Codebooks persist as JSON and reload bit-exactly.
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("codebook.json");
    save_codebook(&cb, &path)?;
    let reloaded = load_codebook(&path)?;
    assert_eq!(cb, reloaded);
    println!(
        "saved and reloaded identically ({} bytes at {})",
        std::fs::metadata(&path)?.len(),
        path.display()
    );
    Ok(())
}
