//! Sequential accusation from trigger queries.
//!
//! Each query compares the suspect model's answer against every user's
//! fingerprint and converts the (mis)match into a score whose distribution
//! separates colluders from innocents. A per-user sequential probability
//! ratio test (SPRT) over empirically estimated score distributions decides
//! when to accuse, when to clear the model entirely, and when to keep
//! querying — so tracing consumes only as many triggers as the evidence
//! requires. A concentration-bound threshold on the cumulative score gives a
//! second, distribution-free accusation route.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::channel::{sample_colluders, ChannelModel};
use crate::codebook::{Codebook, Symbol};
use crate::error::{Error, Result};
use crate::rng::{purpose, substream};

/// Anything that can answer trigger queries: a simulated leaked model, a
/// recorded transcript, or a live network behind an API.
pub trait TriggerOracle: Sync {
    fn query(&self, position: usize) -> Result<Symbol>;
}

impl<F> TriggerOracle for F
where
    F: Fn(usize) -> Result<Symbol> + Sync,
{
    fn query(&self, position: usize) -> Result<Symbol> {
        self(position)
    }
}

/// Match and mismatch scores for a symbol of probability `p`:
/// `U1(p) = sqrt((1-p)/p)` on a match, `U0(p) = -sqrt(p/(1-p))` on a
/// mismatch. Rare symbols reward a match heavily and punish a mismatch
/// lightly; `U1(p) * U0(p) = -1` always.
pub fn score_functions(p: f64) -> Result<(f64, f64)> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(Error::domain(format!(
            "score functions need a probability strictly inside (0, 1), got {p}"
        )));
    }
    let u1 = ((1.0 - p) / p).sqrt();
    let u0 = -(p / (1.0 - p)).sqrt();
    Ok((u1, u0))
}

/// Score of `user` at `position` given the model answered `observed`:
/// `U1` of the observed symbol's bias if the user's fingerprint matches,
/// else `U0` of that same bias. Both branches evaluate the bias of the
/// observed symbol, not the user's.
pub fn position_score(
    cb: &Codebook,
    user: usize,
    position: usize,
    observed: Symbol,
) -> Result<f64> {
    check_indices(cb, user, position, observed)?;
    let p = cb.bias.prob(position, observed);
    let (u1, u0) = score_functions(p)?;
    Ok(if cb.fingerprints.symbol(user, position) == observed {
        u1
    } else {
        u0
    })
}

fn check_indices(cb: &Codebook, user: usize, position: usize, observed: Symbol) -> Result<()> {
    if user >= cb.n_users() {
        return Err(Error::index(format!(
            "user {user} beyond codebook with {} users",
            cb.n_users()
        )));
    }
    if position >= cb.params.m {
        return Err(Error::index(format!(
            "position {position} beyond m={}",
            cb.params.m
        )));
    }
    if observed as usize >= cb.params.q {
        return Err(Error::index(format!(
            "observed symbol {observed} outside alphabet 0..{}",
            cb.params.q
        )));
    }
    Ok(())
}

/// Number of histogram bins used for estimated score distributions.
pub const SCORE_BINS: usize = 256;

/// Fixed-width bin edges covering every reachable per-position score. The
/// score magnitude never exceeds `sqrt((1-tau)/tau)`, so the edges span that
/// bound symmetrically plus a small margin.
pub fn score_bin_edges(tau: f64, bins: usize) -> Vec<f64> {
    let span = ((1.0 - tau) / tau).sqrt() * (1.0 + 1.0 / 64.0);
    (0..=bins)
        .map(|k| -span + 2.0 * span * k as f64 / bins as f64)
        .collect()
}

/// Counts behind each estimated distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub col: u64,
    pub inn: u64,
}

/// Empirical per-position score distributions for colluders and innocents,
/// on a shared histogram. Additive smoothing keeps every bin strictly
/// positive so log-likelihood ratios stay finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistributions {
    bin_edges: Vec<f64>,
    p_col: Vec<f64>,
    p_inn: Vec<f64>,
    smoothing: f64,
    n_samples: SampleCounts,
    channel_descriptor: String,
}

impl ScoreDistributions {
    /// Build from raw histogram counts, applying additive smoothing of
    /// `smoothing` pseudo-counts per bin before normalization.
    pub fn from_counts(
        bin_edges: Vec<f64>,
        col_counts: &[u64],
        inn_counts: &[u64],
        smoothing: f64,
        channel_descriptor: String,
    ) -> Result<Self> {
        let bins = bin_edges.len().saturating_sub(1);
        if col_counts.len() != bins || inn_counts.len() != bins {
            return Err(Error::domain(format!(
                "{} edges and {}/{} count bins do not agree",
                bin_edges.len(),
                col_counts.len(),
                inn_counts.len()
            )));
        }
        let normalize = |counts: &[u64]| -> (Vec<f64>, u64) {
            let total: u64 = counts.iter().sum();
            let denom = total as f64 + smoothing * bins as f64;
            (
                counts
                    .iter()
                    .map(|&c| (c as f64 + smoothing) / denom)
                    .collect(),
                total,
            )
        };
        let (p_col, total_col) = normalize(col_counts);
        let (p_inn, total_inn) = normalize(inn_counts);
        let dists = ScoreDistributions {
            bin_edges,
            p_col,
            p_inn,
            smoothing,
            n_samples: SampleCounts {
                col: total_col,
                inn: total_inn,
            },
            channel_descriptor,
        };
        dists.validate()?;
        Ok(dists)
    }

    /// Assemble from already-normalized masses (e.g. synthetic test
    /// distributions), validating the invariants.
    pub fn from_masses(
        bin_edges: Vec<f64>,
        p_col: Vec<f64>,
        p_inn: Vec<f64>,
        smoothing: f64,
        n_samples: SampleCounts,
        channel_descriptor: String,
    ) -> Result<Self> {
        let dists = ScoreDistributions {
            bin_edges,
            p_col,
            p_inn,
            smoothing,
            n_samples,
            channel_descriptor,
        };
        dists.validate()?;
        Ok(dists)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_edges.len() < 2 {
            return Err(Error::malformed("need at least two bin edges".to_string()));
        }
        if self
            .bin_edges
            .windows(2)
            .any(|w| !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]))
        {
            return Err(Error::malformed(
                "bin edges must be finite and strictly increasing".to_string(),
            ));
        }
        let bins = self.bin_edges.len() - 1;
        for (name, masses) in [("p_col", &self.p_col), ("p_inn", &self.p_inn)] {
            if masses.len() != bins {
                return Err(Error::malformed(format!(
                    "{name} has {} bins, edges imply {bins}",
                    masses.len()
                )));
            }
            if let Some(idx) = masses.iter().position(|&p| p <= 0.0 || !p.is_finite()) {
                return Err(Error::EmptyDistribution(format!(
                    "{name} bin {idx} has non-positive mass {}",
                    masses[idx]
                )));
            }
            let sum: f64 = masses.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::malformed(format!(
                    "{name} sums to {sum}, expected 1 within 1e-9"
                )));
            }
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.bin_edges.len() - 1
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn p_col(&self) -> &[f64] {
        &self.p_col
    }

    pub fn p_inn(&self) -> &[f64] {
        &self.p_inn
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn n_samples(&self) -> SampleCounts {
        self.n_samples
    }

    pub fn channel_descriptor(&self) -> &str {
        &self.channel_descriptor
    }

    /// Bin holding `score`; out-of-range scores clamp into the edge bins.
    pub fn bin_index(&self, score: f64) -> usize {
        let above = self.bin_edges.partition_point(|&e| e <= score);
        above.saturating_sub(1).min(self.n_bins() - 1)
    }

    /// Centre of bin `idx`.
    pub fn bin_center(&self, idx: usize) -> f64 {
        0.5 * (self.bin_edges[idx] + self.bin_edges[idx + 1])
    }

    /// Log-likelihood ratio (colluder over innocent) of one score, in the
    /// given logarithm base.
    pub fn log_likelihood_ratio(&self, score: f64, log_base: f64) -> Result<f64> {
        let bin = self.bin_index(score);
        let (pc, pi) = (self.p_col[bin], self.p_inn[bin]);
        if pc <= 0.0 || pi <= 0.0 {
            return Err(Error::EmptyDistribution(format!(
                "bin {bin} has masses col={pc}, inn={pi}"
            )));
        }
        Ok((pc / pi).ln() / log_base.ln())
    }

    /// Mean of the colluder distribution (bin centres weighted by mass).
    pub fn mean_col(&self) -> f64 {
        self.p_col
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.bin_center(i))
            .sum()
    }

    /// Mean of the innocent distribution.
    pub fn mean_inn(&self) -> f64 {
        self.p_inn
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.bin_center(i))
            .sum()
    }
}

/// Write score distributions as JSON.
pub fn save_dists(dists: &ScoreDistributions, path: impl AsRef<Path>) -> Result<()> {
    dists.validate()?;
    let writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer(writer, dists)?;
    Ok(())
}

/// Read score distributions back, re-validating the invariants.
pub fn load_dists(path: impl AsRef<Path>) -> Result<ScoreDistributions> {
    let reader = BufReader::new(File::open(path)?);
    let dists: ScoreDistributions = serde_json::from_reader(reader)
        .map_err(|e| Error::malformed(format!("not a score-distribution file: {e}")))?;
    dists.validate()?;
    Ok(dists)
}

/// Estimate the colluder and innocent score distributions by Monte Carlo:
/// sample `trials` random collusions of size `c0`, push all `m` positions
/// through the channel model, and pool the per-position scores of colluding
/// users into one histogram and of everyone else into the other.
///
/// Trials run in parallel on per-trial seed substreams and merge by
/// histogram addition, so the result does not depend on the worker count.
pub fn estimate_score_distributions(
    cb: &Codebook,
    model: &ChannelModel,
    c0: usize,
    trials: usize,
    seed: u64,
) -> Result<ScoreDistributions> {
    if trials < 1 {
        return Err(Error::domain("need at least one trial".to_string()));
    }
    let n_users = cb.n_users();
    if n_users <= c0 {
        return Err(Error::InsufficientUsers { n_users, c: c0 });
    }
    model.validate_for(cb.params.q, cb.params.m)?;

    let edges = score_bin_edges(cb.params.tau, SCORE_BINS);
    let bins = SCORE_BINS;
    let m = cb.params.m;
    let q = cb.params.q;

    let (col_counts, inn_counts) = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(Vec<u64>, Vec<u64>)> {
            let mut rng = substream(seed, &[purpose::ESTIMATION, trial as u64]);
            let colluders = sample_colluders(n_users, c0, &mut rng)?;
            let mut is_colluder = vec![false; n_users];
            for &j in &colluders {
                is_colluder[j] = true;
            }
            let mut col = vec![0u64; bins];
            let mut inn = vec![0u64; bins];
            let mut held = Vec::with_capacity(c0);
            for i in 0..m {
                held.clear();
                held.extend(colluders.iter().map(|&j| cb.fingerprints.symbol(j, i)));
                let y = model.merge(&held, q, i, &mut rng)?;
                let p = cb.bias.prob(i, y);
                let (u1, u0) = score_functions(p)?;
                let bin1 = bin_of(&edges, u1);
                let bin0 = bin_of(&edges, u0);
                for (j, &guilty) in is_colluder.iter().enumerate() {
                    let target = if guilty { &mut col } else { &mut inn };
                    if cb.fingerprints.symbol(j, i) == y {
                        target[bin1] += 1;
                    } else {
                        target[bin0] += 1;
                    }
                }
            }
            Ok((col, inn))
        })
        .try_reduce(
            || (vec![0u64; bins], vec![0u64; bins]),
            |mut a, b| {
                for (x, y) in a.0.iter_mut().zip(&b.0) {
                    *x += y;
                }
                for (x, y) in a.1.iter_mut().zip(&b.1) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    let descriptor = format!(
        "q={} m={} kappa={} tau={} strategy={} rho={} skew={} c0={c0} trials={trials} seed={seed}",
        q,
        m,
        cb.params.kappa,
        cb.params.tau,
        model.strategy,
        model.ma_violation_rate,
        model
            .skew
            .as_ref()
            .map(|s| s.rate.to_string())
            .unwrap_or_else(|| "none".to_string()),
    );
    ScoreDistributions::from_counts(edges, &col_counts, &inn_counts, 1.0, descriptor)
}

fn bin_of(edges: &[f64], score: f64) -> usize {
    let above = edges.partition_point(|&e| e <= score);
    above.saturating_sub(1).min(edges.len() - 2)
}

/// Error targets and decision thresholds for the sequential test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtConfig {
    /// Target false-positive rate (accusing an innocent).
    pub eps1: f64,
    /// Target false-negative rate (clearing a colluder).
    pub eps2: f64,
    /// Exoneration threshold (negative).
    pub a: f64,
    /// Accusation threshold (positive).
    pub b: f64,
    /// Base of the log-likelihood logarithm.
    pub log_base: f64,
}

pub const DEFAULT_LOG_BASE: f64 = 10.0;

impl SprtConfig {
    /// Derive thresholds from the error targets in base 10:
    /// `a = log(eps2 / (1 - eps1))`, `b = log((1 - eps2) / eps1)`.
    pub fn derive(eps1: f64, eps2: f64) -> Result<Self> {
        Self::derive_with_base(eps1, eps2, DEFAULT_LOG_BASE)
    }

    pub fn derive_with_base(eps1: f64, eps2: f64, log_base: f64) -> Result<Self> {
        check_rates(eps1, eps2, log_base)?;
        let a = (eps2 / (1.0 - eps1)).ln() / log_base.ln();
        let b = ((1.0 - eps2) / eps1).ln() / log_base.ln();
        let config = SprtConfig {
            eps1,
            eps2,
            a,
            b,
            log_base,
        };
        config.validate()?;
        Ok(config)
    }

    /// Use explicit thresholds instead of the derived ones.
    pub fn with_thresholds(eps1: f64, eps2: f64, a: f64, b: f64, log_base: f64) -> Result<Self> {
        check_rates(eps1, eps2, log_base)?;
        let config = SprtConfig {
            eps1,
            eps2,
            a,
            b,
            log_base,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.eps1, self.eps2, self.log_base)?;
        if !(self.a < 0.0 && 0.0 < self.b) {
            return Err(Error::domain(format!(
                "thresholds must satisfy a < 0 < b, got a={}, b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

fn check_rates(eps1: f64, eps2: f64, log_base: f64) -> Result<()> {
    for (name, eps) in [("eps1", eps1), ("eps2", eps2)] {
        if !eps.is_finite() || !(0.0 < eps && eps < 1.0) {
            return Err(Error::domain(format!(
                "{name} must lie in (0, 1), got {eps}"
            )));
        }
    }
    if !log_base.is_finite() || log_base <= 1.0 {
        return Err(Error::domain(format!(
            "log base must exceed 1, got {log_base}"
        )));
    }
    Ok(())
}

/// Distribution-free accusation threshold on the cumulative score: the
/// smallest `Z` such that an innocent user's probability of ever reaching
/// `S > Z` within `t` queries stays below `eps1`, via a Bernstein-style
/// bound. Closed form `Z = L/(3 sqrt(tau)) + sqrt(L^2/(9 tau) + 2 L t)`
/// with `L = ln(1/eps1)`.
pub fn z_threshold(t: usize, eps1: f64, tau: f64) -> Result<f64> {
    if t < 1 {
        return Err(Error::domain(
            "query count t must be at least 1".to_string(),
        ));
    }
    if !eps1.is_finite() || !(0.0 < eps1 && eps1 < 1.0) {
        return Err(Error::domain(format!(
            "eps1 must lie in (0, 1), got {eps1}"
        )));
    }
    if !tau.is_finite() || !(0.0 < tau && tau < 1.0) {
        return Err(Error::domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    let l = -eps1.ln();
    let tf = t as f64;
    Ok(l / (3.0 * tau.sqrt()) + (l * l / (9.0 * tau) + 2.0 * l * tf).sqrt())
}

/// Where one user stands in the sequential test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserStatus {
    Active,
    Accused,
    Exonerated,
}

/// Overall outcome of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// At least one user accused.
    Accused,
    /// Every user cleared: the model is deemed innocent.
    Exonerated,
    /// Evidence ran out before a decision.
    Undecided,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Accused => "accused",
            Decision::Exonerated => "exonerated",
            Decision::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

/// Running state of the per-user sequential test: cumulative log-likelihood
/// `W`, cumulative score `S`, and status for every user, plus the set of
/// consumed positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SprtState {
    w: Vec<f64>,
    s: Vec<f64>,
    status: Vec<UserStatus>,
    t: usize,
    t_star: Option<usize>,
    consumed: Vec<bool>,
}

impl SprtState {
    pub fn new(n_users: usize, m: usize) -> Self {
        SprtState {
            w: vec![0.0; n_users],
            s: vec![0.0; n_users],
            status: vec![UserStatus::Active; n_users],
            t: 0,
            t_star: None,
            consumed: vec![false; m],
        }
    }

    pub fn n_users(&self) -> usize {
        self.w.len()
    }

    /// Queries consumed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Query count at which the first decision fell, if any.
    pub fn t_star(&self) -> Option<usize> {
        self.t_star
    }

    pub fn w(&self, user: usize) -> f64 {
        self.w[user]
    }

    pub fn s(&self, user: usize) -> f64 {
        self.s[user]
    }

    pub fn status(&self, user: usize) -> UserStatus {
        self.status[user]
    }

    pub fn accused_users(&self) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&j| self.status[j] == UserStatus::Accused)
            .collect()
    }

    /// The model-level decision implied by the current statuses.
    pub fn decision(&self) -> Decision {
        if self.status.contains(&UserStatus::Accused) {
            Decision::Accused
        } else if self.status.iter().all(|&s| s == UserStatus::Exonerated) {
            Decision::Exonerated
        } else {
            Decision::Undecided
        }
    }
}

/// Consume one query: update every user's `W` by the log-likelihood ratio
/// of their score and their cumulative score `S`, then apply the decision
/// rules — `W >= b` accuses, `S > Z_t` accuses, and all users
/// simultaneously below `a` exonerates everyone. Statuses never leave
/// accused or exonerated.
pub fn sprt_step(
    state: &mut SprtState,
    cb: &Codebook,
    dists: &ScoreDistributions,
    config: &SprtConfig,
    position: usize,
    observed: Symbol,
) -> Result<()> {
    check_indices(cb, 0, position, observed)?;
    if state.n_users() != cb.n_users() {
        return Err(Error::domain(format!(
            "state tracks {} users, codebook has {}",
            state.n_users(),
            cb.n_users()
        )));
    }
    if state.consumed[position] {
        return Err(Error::DuplicatePosition(position));
    }

    let p = cb.bias.prob(position, observed);
    let (u1, u0) = score_functions(p)?;
    let llr1 = dists.log_likelihood_ratio(u1, config.log_base)?;
    let llr0 = dists.log_likelihood_ratio(u0, config.log_base)?;

    for j in 0..state.n_users() {
        let matched = cb.fingerprints.symbol(j, position) == observed;
        state.w[j] += if matched { llr1 } else { llr0 };
        state.s[j] += if matched { u1 } else { u0 };
    }
    state.consumed[position] = true;
    state.t += 1;

    let zt = z_threshold(state.t, config.eps1, cb.params.tau)?;
    for j in 0..state.n_users() {
        if state.status[j] == UserStatus::Active && (state.w[j] >= config.b || state.s[j] > zt) {
            state.status[j] = UserStatus::Accused;
        }
    }
    if state.w.iter().all(|&w| w < config.a) {
        for status in state.status.iter_mut() {
            if *status == UserStatus::Active {
                *status = UserStatus::Exonerated;
            }
        }
    }
    if state.t_star.is_none() && state.decision() != Decision::Undecided {
        state.t_star = Some(state.t);
    }
    Ok(())
}

/// Result of a full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AccusationOutcome {
    pub decision: Decision,
    /// Accused user indices (empty unless `decision` is `Accused`).
    pub accused: Vec<usize>,
    /// Queries consumed at the decision, or total queries if undecided.
    pub t_star: usize,
    pub state: SprtState,
}

fn outcome_from(state: SprtState) -> AccusationOutcome {
    AccusationOutcome {
        decision: state.decision(),
        accused: state.accused_users(),
        t_star: state.t_star().unwrap_or(state.t()),
        state,
    }
}

/// Query the oracle position by position in `query_order`, stepping the
/// sequential test until it decides or the order is exhausted (returning an
/// undecided outcome with the full state in that case). Oracle failures
/// propagate annotated with the number of queries already consumed.
pub fn sequential_accuse(
    cb: &Codebook,
    dists: &ScoreDistributions,
    config: &SprtConfig,
    oracle: &dyn TriggerOracle,
    query_order: &[usize],
) -> Result<AccusationOutcome> {
    config.validate()?;
    let mut state = SprtState::new(cb.n_users(), cb.params.m);
    for &position in query_order {
        let observed = oracle.query(position).map_err(|e| Error::OracleFailure {
            consumed: state.t(),
            source: Box::new(e),
        })?;
        sprt_step(&mut state, cb, dists, config, position, observed)?;
        if state.decision() != Decision::Undecided {
            break;
        }
    }
    Ok(outcome_from(state))
}

/// A seeded random order over all `m` positions.
pub fn random_query_order(m: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut substream(seed, &[purpose::QUERY_ORDER]));
    order
}

/// An ordered record of trigger queries and the model's answers, for
/// offline accusation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackTranscript {
    entries: Vec<(usize, Symbol)>,
}

impl AttackTranscript {
    pub fn new(entries: Vec<(usize, Symbol)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for &(position, _) in &entries {
            if !seen.insert(position) {
                return Err(Error::DuplicatePosition(position));
            }
        }
        Ok(AttackTranscript { entries })
    }

    pub fn entries(&self) -> &[(usize, Symbol)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Record a transcript by querying an oracle along `query_order`.
    pub fn from_oracle(oracle: &dyn TriggerOracle, query_order: &[usize]) -> Result<Self> {
        let entries = query_order
            .iter()
            .map(|&i| oracle.query(i).map(|y| (i, y)))
            .collect::<Result<Vec<_>>>()?;
        AttackTranscript::new(entries)
    }

    /// Parse the CSV form: one `position,symbol` pair per line. Blank
    /// lines, `#` comments, and a literal `position,symbol` header are
    /// skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "position,symbol" {
                continue;
            }
            let mut fields = line.split(',');
            let (pos, sym) = match (fields.next(), fields.next(), fields.next()) {
                (Some(p), Some(s), None) => (p.trim(), s.trim()),
                _ => {
                    return Err(Error::malformed(format!(
                        "transcript line {}: expected `position,symbol`, got {line:?}",
                        lineno + 1
                    )))
                }
            };
            let position: usize = pos.parse().map_err(|_| {
                Error::malformed(format!(
                    "transcript line {}: bad position {pos:?}",
                    lineno + 1
                ))
            })?;
            let symbol: Symbol = sym.parse().map_err(|_| {
                Error::malformed(format!(
                    "transcript line {}: bad symbol {sym:?}",
                    lineno + 1
                ))
            })?;
            entries.push((position, symbol));
        }
        AttackTranscript::new(entries)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        AttackTranscript::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("position,symbol\n");
        for &(position, symbol) in &self.entries {
            out.push_str(&format!("{position},{symbol}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        writer.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Check all entries against a codebook's dimensions.
    pub fn validate_for(&self, q: usize, m: usize) -> Result<()> {
        for &(position, symbol) in &self.entries {
            if position >= m {
                return Err(Error::index(format!("position {position} beyond m={m}")));
            }
            if symbol as usize >= q {
                return Err(Error::index(format!(
                    "symbol {symbol} outside alphabet 0..{q}"
                )));
            }
        }
        Ok(())
    }
}

/// Run the sequential test over a recorded transcript, stopping at the
/// first decision.
pub fn run_transcript(
    cb: &Codebook,
    dists: &ScoreDistributions,
    config: &SprtConfig,
    transcript: &AttackTranscript,
) -> Result<AccusationOutcome> {
    config.validate()?;
    transcript.validate_for(cb.params.q, cb.params.m)?;
    let mut state = SprtState::new(cb.n_users(), cb.params.m);
    for &(position, observed) in transcript.entries() {
        sprt_step(&mut state, cb, dists, config, position, observed)?;
        if state.decision() != Decision::Undecided {
            break;
        }
    }
    Ok(outcome_from(state))
}

/// False-positive rate of the non-sequential baseline that requires
/// `t_correct` of `t` independent trigger answers to match: the binomial
/// probability `C(t, t') p^t' (1-p)^(t-t')` of a random-answering model
/// doing that well by luck.
pub fn baseline_independent_fpr(t: usize, t_correct: usize, p_random: f64) -> Result<f64> {
    if t_correct > t {
        return Err(Error::domain(format!(
            "t_correct={t_correct} exceeds t={t}"
        )));
    }
    if !p_random.is_finite() || !(0.0 < p_random && p_random < 1.0) {
        return Err(Error::domain(format!(
            "p_random must lie in (0, 1), got {p_random}"
        )));
    }
    let mut binom = 1.0f64;
    for k in 1..=t_correct {
        binom *= (t - t_correct + k) as f64 / k as f64;
    }
    Ok(binom * p_random.powi(t_correct as i32) * (1.0 - p_random).powi((t - t_correct) as i32))
}

/// Smallest `t` such that a random-answering model gets all `t` triggers
/// right with probability at most `eps1`.
pub fn baseline_minimal_queries(eps1: f64, p_random: f64) -> Result<usize> {
    if !eps1.is_finite() || !(0.0 < eps1 && eps1 < 1.0) {
        return Err(Error::domain(format!(
            "eps1 must lie in (0, 1), got {eps1}"
        )));
    }
    if !p_random.is_finite() || !(0.0 < p_random && p_random < 1.0) {
        return Err(Error::domain(format!(
            "p_random must lie in (0, 1), got {p_random}"
        )));
    }
    // Tolerate float drift at exact powers (0.1^6 accumulates to just
    // above 1e-6) so the mathematical boundary case counts as reached.
    let target = eps1 * (1.0 + 1e-9);
    let mut t = 0usize;
    let mut all_correct = 1.0f64;
    while all_correct > target {
        t += 1;
        all_correct *= p_random;
        if t > 1_000_000 {
            return Err(Error::domain(
                "query requirement exceeds 1e6; eps1 too small for p_random".to_string(),
            ));
        }
    }
    Ok(t)
}
