//! Estimate the guilty and innocent score distributions that power the
//! sequential test, and peek at their shape.
//!
//! Scores are binned into 256 fixed-width bins; the accusation stage looks
//! up the log-likelihood ratio of the observed score bin by bin. The
//! histograms come from Monte Carlo collusions against the configured
//! channel and persist as a JSON artifact.
//!
//! ```bash
//! cargo run --release --example score_distributions
//! ```

use traitor_tracing::accusation::{estimate_score_distributions, load_dists, save_dists};
use traitor_tracing::channel::ChannelModel;
use traitor_tracing::codebook::{generate_codebook, TardosParams};

fn main() -> traitor_tracing::Result<()> {
    let params = TardosParams::new(10, 400, 0.1, 6, 51)?;
    let cb = generate_codebook(&params, 30)?;

    // A noisy preset channel: two colluders fine-tuning the merged model
    // violate the marking assumption 15.1% of the time.
    let channel = ChannelModel::from_preset("c2/fine-tune")?;
    let dists = estimate_score_distributions(&cb, &channel, 2, 300, 57)?;

    println!("descriptor: {}", dists.channel_descriptor());
    println!(
        "samples: {} colluder scores, {} innocent scores",
        dists.n_samples().col,
        dists.n_samples().inn
    );
    println!(
        "means: colluder {:+.4}, innocent {:+.4} (innocent is centered by design)",
        dists.mean_col(),
        dists.mean_inn()
    );

    // Coarse view: mass in ten equal stretches of the score range.
    let bins = dists.n_bins();
    let stretch = bins / 10;
    println!(
        "\n{:>22}  {:>10}  {:>10}",
        "score range", "P[guilty]", "P[innocent]"
    );
    for chunk in 0..10 {
        let lo = chunk * stretch;
        let hi = if chunk == 9 { bins } else { lo + stretch };
        let col: f64 = dists.p_col()[lo..hi].iter().sum();
        let inn: f64 = dists.p_inn()[lo..hi].iter().sum();
        let left = dists.bin_edges()[lo];
        let right = dists.bin_edges()[hi];
        println!("[{left:>9.3}, {right:>9.3})  {col:>10.5}  {inn:>10.5}");
    }

    // Log-likelihood ratio at the two scores a typical position can emit:
    // the observed symbol either matches a user's code (positive score) or
    // not (small negative score). A match pushes towards accusation.
    let (match_score, mismatch_score) = traitor_tracing::accusation::score_functions(0.1)?;
    println!();
    for (label, score) in [
        ("match at bias 0.1", match_score),
        ("mismatch at bias 0.1", mismatch_score),
    ] {
        let llr = dists.log_likelihood_ratio(score, 10.0)?;
        println!("log10 LR for {label} (score {score:+.3}): {llr:+.4}");
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("dists.json");
    save_dists(&dists, &path)?;
    let reloaded = load_dists(&path)?;
    assert_eq!(dists, reloaded);
    println!("\nsaved and reloaded identically at {}", path.display());
    Ok(())
}
