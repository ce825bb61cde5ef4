//! Collusion-resistant fingerprinting and traitor tracing for leaked
//! classifier models.
//!
//! The crate covers the full pipeline: q-ary codebooks over trigger inputs
//! ([`codebook`]), a model of how colluding users merge their copies
//! ([`channel`]), sequential accusation that queries a suspect model one
//! trigger at a time ([`accusation`]), an orthogonal-subspace white-box
//! scheme for when model weights are available ([`whitebox`]), and a Monte
//! Carlo harness ([`harness`]) that measures error rates and query budgets.
//!
//! ## Examples
//!
//! The `examples/` directory is the front door — one runnable program per
//! capability, each printing what it demonstrates:
//!
//! - **`generate_codebook`** — build a codebook, inspect bias cutoffs and
//!   fingerprints, persist it as JSON
//! - **`trace_single_leaker`** — catch a verbatim leaker in a few dozen
//!   shared queries
//! - **`collusion_strategies`** — majority / minority / interleaving
//!   merges and their decision times
//! - **`score_distributions`** — estimate the guilty/innocent score
//!   histograms behind the sequential test
//! - **`transcript_accusation`** — accuse offline from a recorded
//!   `position,symbol` CSV
//! - **`marking_violations`** — a noisy custom channel, measured violation
//!   rate, calibrated accusations
//! - **`kappa_sweep`** — bias spread vs. decision time
//! - **`trigger_skew`** — true-label leakage vs. decision time
//! - **`baseline_comparison`** — shared triggers vs. six private queries
//!   per user
//! - **`ma_violation_table`** — measured violation rates for all channel
//!   presets
//! - **`whitebox_tracing`** — weight-space projections that survive
//!   averaging, fine-tuning, and pruning
//!
//! ```bash
//! cargo run --release --example trace_single_leaker
//! cargo run --release --example whitebox_tracing
//! ```
//!
//! The same pipeline is scriptable through the thin `ttrace` binary
//! (`ttrace simulate --config recipe.toml`); see [`harness::cli`].

pub mod accusation;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod rng;
pub mod whitebox;

pub use error::{Error, Result};
