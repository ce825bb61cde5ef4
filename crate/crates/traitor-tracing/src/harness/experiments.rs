//! Experiment execution: Monte Carlo trials over codebooks, channels, the
//! sequential test, and white-box projections.
//!
//! Every trial's randomness derives from `hash(master seed, salt, indices)`
//! alone, so trials can run on any number of worker threads in any order
//! and still produce identical results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::accusation::{
    baseline_minimal_queries, estimate_score_distributions, random_query_order, sequential_accuse,
    Decision, ScoreDistributions, SprtConfig,
};
use crate::channel::{
    make_innocent_oracle, make_oracle, measure_ma_violation_rate, preset_collusion_size,
    sample_colluders, ChannelModel, CHANNEL_PRESETS,
};
use crate::codebook::{generate_codebook, Codebook};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind, WhiteboxAttack};
use crate::rng::{derive_seed, purpose, substream};
use crate::whitebox::{
    accuse_whitebox, attack_finetune, attack_prune, collude_average, default_threshold,
    embed_users, PruneMode, WhiteboxEnsemble,
};

// Salts separating the harness's derived seeds from each other; combined
// with the master seed and condition/trial indices.
const SALT_CODEBOOK: u64 = 0x20;
const SALT_ESTIMATION: u64 = 0x21;
const SALT_TRIAL: u64 = 0x22;
const SALT_SKEW: u64 = 0x23;
const SALT_WHITEBOX: u64 = 0x24;

/// Identifies the exact recipe and code version behind a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub tool: String,
    pub version: String,
}

impl Provenance {
    fn for_config(config: &ExperimentConfig) -> Self {
        Provenance {
            config_hash: config.config_hash(),
            seed: config.seed,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// One Monte Carlo trial's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Groups trials of one experimental condition (channel, kappa value,
    /// skew rate, ...); conditions aggregate separately.
    pub condition: String,
    pub decision: Decision,
    pub t_star: usize,
    pub accused: Vec<usize>,
    pub colluders: Vec<usize>,
    /// Final evidence per accused user (log-likelihood sum, or projection
    /// value for white-box trials), aligned with `accused`.
    pub scores: Vec<f64>,
}

/// Per-condition aggregate counts and decision-time statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub trials: usize,
    pub accused_trials: usize,
    pub exonerated_trials: usize,
    pub undecided_trials: usize,
    /// Trials where at least one true colluder was accused.
    pub caught_one: usize,
    /// Trials where every colluder was accused and nobody else.
    pub caught_exactly: usize,
    /// Trials accusing at least one non-colluder.
    pub false_positive_trials: usize,
    /// Guilty trials (non-empty colluder set) failing the catch-one goal.
    pub false_negative_trials: usize,
    pub t_star_mean: f64,
    pub t_star_median: f64,
    /// Decision-time counts keyed by exact value.
    pub t_star_histogram: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub by_condition: BTreeMap<String, ConditionSummary>,
}

/// Rebuild aggregates from per-trial records (pure, so results can always
/// be checked for self-consistency).
pub fn aggregate(records: &[TrialRecord]) -> Aggregates {
    let mut grouped: BTreeMap<String, Vec<&TrialRecord>> = BTreeMap::new();
    for record in records {
        grouped
            .entry(record.condition.clone())
            .or_default()
            .push(record);
    }
    let by_condition = grouped
        .into_iter()
        .map(|(condition, group)| {
            let mut summary = ConditionSummary {
                trials: group.len(),
                accused_trials: 0,
                exonerated_trials: 0,
                undecided_trials: 0,
                caught_one: 0,
                caught_exactly: 0,
                false_positive_trials: 0,
                false_negative_trials: 0,
                t_star_mean: 0.0,
                t_star_median: 0.0,
                t_star_histogram: BTreeMap::new(),
            };
            let mut t_stars: Vec<usize> = Vec::with_capacity(group.len());
            for r in &group {
                match r.decision {
                    Decision::Accused => summary.accused_trials += 1,
                    Decision::Exonerated => summary.exonerated_trials += 1,
                    Decision::Undecided => summary.undecided_trials += 1,
                }
                let hit = r.accused.iter().any(|j| r.colluders.contains(j));
                let fp = r.accused.iter().any(|j| !r.colluders.contains(j));
                if hit {
                    summary.caught_one += 1;
                }
                if fp {
                    summary.false_positive_trials += 1;
                }
                if !r.colluders.is_empty() && !hit {
                    summary.false_negative_trials += 1;
                }
                let all = r.colluders.iter().all(|j| r.accused.contains(j));
                if !r.colluders.is_empty() && all && !fp {
                    summary.caught_exactly += 1;
                }
                t_stars.push(r.t_star);
                *summary.t_star_histogram.entry(r.t_star).or_insert(0) += 1;
            }
            summary.t_star_mean =
                t_stars.iter().sum::<usize>() as f64 / t_stars.len().max(1) as f64;
            t_stars.sort_unstable();
            summary.t_star_median = match t_stars.len() {
                0 => 0.0,
                n if n % 2 == 1 => t_stars[n / 2] as f64,
                n => (t_stars[n / 2 - 1] + t_stars[n / 2]) as f64 / 2.0,
            };
            (condition, summary)
        })
        .collect();
    Aggregates { by_condition }
}

/// Full experiment output: provenance, raw trials, aggregates, and
/// experiment-specific extra tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub provenance: Provenance,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    pub extras: BTreeMap<String, serde_json::Value>,
}

/// Run the experiment selected in the config (which must be validated and
/// have its kind resolved).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let kind = config
        .experiment
        .ok_or_else(|| Error::config("config has no experiment kind resolved".to_string()))?;
    let (records, extras) = match kind {
        ExperimentKind::Simulate => simulate(config)?,
        ExperimentKind::BaselineCompare => baseline_compare(config)?,
        ExperimentKind::SweepKappa => sweep_kappa(config)?,
        ExperimentKind::TriggerSkew => trigger_skew(config)?,
        ExperimentKind::Whitebox => whitebox(config)?,
        ExperimentKind::MaTable => ma_table(config)?,
    };
    let aggregates = aggregate(&records);
    Ok(ExperimentResult {
        provenance: Provenance::for_config(config),
        records,
        aggregates,
        extras,
    })
}

/// Like [`run_experiment`] but inside a worker pool of the given size
/// (`None` = default); the output does not depend on the choice.
pub fn run_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    match threads {
        None => run_experiment(config),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot build a {n}-thread pool: {e}")))?;
            pool.install(|| run_experiment(config))
        }
    }
}

type Extras = BTreeMap<String, serde_json::Value>;

/// A codebook with matched score distributions and test settings, ready to
/// run trials against one channel condition.
struct Bench {
    cb: Codebook,
    dists: ScoreDistributions,
    sprt: SprtConfig,
    model: ChannelModel,
    c: usize,
}

fn prepare_bench(
    config: &ExperimentConfig,
    model: ChannelModel,
    c: usize,
    kappa: Option<f64>,
    bench_idx: u64,
) -> Result<Bench> {
    let cb_seed = derive_seed(config.seed, &[SALT_CODEBOOK, bench_idx]);
    let params = match kappa {
        Some(k) => config.code.to_params_with_kappa(k, cb_seed)?,
        None => config.code.to_params(cb_seed)?,
    };
    let cb = generate_codebook(&params, config.n_users)?;
    let dists = estimate_score_distributions(
        &cb,
        &model,
        c,
        config.estimation_trials,
        derive_seed(config.seed, &[SALT_ESTIMATION, bench_idx]),
    )?;
    Ok(Bench {
        cb,
        dists,
        sprt: config.sprt.to_config()?,
        model,
        c,
    })
}

/// One guilty trial: sample a collusion, trace the merged model.
fn guilty_trial(
    bench: &Bench,
    condition: &str,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let mut crng = substream(trial_seed, &[purpose::COLLUSION_SAMPLE]);
    let colluders = sample_colluders(bench.cb.n_users(), bench.c, &mut crng)?;
    let spec = bench.model.spec(colluders.clone(), trial_seed)?;
    let oracle = make_oracle(&spec, &bench.cb)?;
    let order = random_query_order(bench.cb.params.m, trial_seed);
    let outcome = sequential_accuse(&bench.cb, &bench.dists, &bench.sprt, &oracle, &order)?;
    let scores = outcome
        .accused
        .iter()
        .map(|&j| outcome.state.w(j))
        .collect();
    Ok(TrialRecord {
        trial,
        condition: condition.to_string(),
        decision: outcome.decision,
        t_star: outcome.t_star,
        accused: outcome.accused,
        colluders,
        scores,
    })
}

/// One innocent trial: trace a model that answers from fresh fingerprint
/// draws, implicating nobody.
fn innocent_trial(
    bench: &Bench,
    condition: &str,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let oracle = make_innocent_oracle(&bench.cb, trial_seed);
    let order = random_query_order(bench.cb.params.m, trial_seed);
    let outcome = sequential_accuse(&bench.cb, &bench.dists, &bench.sprt, &oracle, &order)?;
    let scores = outcome
        .accused
        .iter()
        .map(|&j| outcome.state.w(j))
        .collect();
    Ok(TrialRecord {
        trial,
        condition: condition.to_string(),
        decision: outcome.decision,
        t_star: outcome.t_star,
        accused: outcome.accused,
        colluders: Vec::new(),
        scores,
    })
}

/// Run `trials` trials of one condition concurrently, in stable order.
fn run_condition(
    config: &ExperimentConfig,
    bench: &Bench,
    condition: &str,
    bench_idx: u64,
    innocent: bool,
) -> Result<Vec<TrialRecord>> {
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(config.seed, &[SALT_TRIAL, bench_idx, trial as u64]);
            if innocent {
                innocent_trial(bench, condition, trial, trial_seed)
            } else {
                guilty_trial(bench, condition, trial, trial_seed)
            }
            .map_err(|e| Error::config(format!("trial {trial} ({condition}): {e}")))
        })
        .collect()
}

fn summary_stats(dists: &ScoreDistributions) -> serde_json::Value {
    serde_json::json!({
        "descriptor": dists.channel_descriptor(),
        "mean_colluder_score": dists.mean_col(),
        "mean_innocent_score": dists.mean_inn(),
    })
}

fn simulate(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    let (model, c) = config.channel.resolve(
        config.code.q,
        config.code.m,
        Some(config.code.c0),
        derive_seed(config.seed, &[SALT_SKEW, 0]),
    )?;
    let condition = config.channel.label(c);
    let bench = prepare_bench(config, model, c, None, 0)?;
    let records = run_condition(config, &bench, &condition, 0, false)?;
    let mut extras = Extras::new();
    extras.insert("distributions".to_string(), summary_stats(&bench.dists));
    Ok((records, extras))
}

fn baseline_compare(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    // The proposed scheme: one shared trigger set, a single leaker, no
    // violations; every user is tested from the same query stream.
    let model = ChannelModel::new(crate::channel::CollusionStrategy::Majority, 0.0)?;
    let bench = prepare_bench(config, model, 1, None, 0)?;
    let condition = "proposed/single-leaker";
    let records = run_condition(config, &bench, condition, 0, false)?;

    // The independent baseline queries each user's private triggers until
    // the all-correct run is improbable under random answers.
    let p_random = 1.0 / config.code.q as f64;
    let per_user = baseline_minimal_queries(config.sprt.eps1, p_random)?;
    let baseline_total = per_user * config.n_users;

    let proposed: Vec<usize> = records.iter().map(|r| r.t_star).collect();
    let max = proposed.iter().copied().max().unwrap_or(0);
    let mean = proposed.iter().sum::<usize>() as f64 / proposed.len().max(1) as f64;
    let every_trial_cheaper = proposed.iter().all(|&t| t < baseline_total);

    let mut extras = Extras::new();
    extras.insert(
        "baseline".to_string(),
        serde_json::json!({
            "per_user_queries": per_user,
            "n_users": config.n_users,
            "total_queries": baseline_total,
        }),
    );
    extras.insert(
        "proposed".to_string(),
        serde_json::json!({
            "total_queries_mean": mean,
            "total_queries_max": max,
            "every_trial_cheaper": every_trial_cheaper,
        }),
    );
    Ok((records, extras))
}

fn sweep_kappa(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    let mut records = Vec::new();
    let mut table = serde_json::Map::new();
    for (i, &kappa) in config.kappa_values.iter().enumerate() {
        let (model, c) = config.channel.resolve(
            config.code.q,
            config.code.m,
            Some(config.code.c0),
            derive_seed(config.seed, &[SALT_SKEW, i as u64]),
        )?;
        let bench = prepare_bench(config, model, c, Some(kappa), i as u64)?;
        let guilty_label = format!("kappa={kappa}/guilty");
        let innocent_label = format!("kappa={kappa}/innocent");
        let guilty = run_condition(config, &bench, &guilty_label, 2 * i as u64, false)?;
        let innocent = run_condition(config, &bench, &innocent_label, 2 * i as u64 + 1, true)?;

        let median = |rs: &[TrialRecord]| {
            let mut ts: Vec<usize> = rs.iter().map(|r| r.t_star).collect();
            ts.sort_unstable();
            match ts.len() {
                0 => 0.0,
                n if n % 2 == 1 => ts[n / 2] as f64,
                n => (ts[n / 2 - 1] + ts[n / 2]) as f64 / 2.0,
            }
        };
        let mean = |rs: &[TrialRecord]| {
            rs.iter().map(|r| r.t_star).sum::<usize>() as f64 / rs.len().max(1) as f64
        };
        table.insert(
            format!("kappa={kappa}"),
            serde_json::json!({
                "guilty_median_t_star": median(&guilty),
                "guilty_mean_t_star": mean(&guilty),
                "innocent_mean_t_star": mean(&innocent),
                "innocent_median_t_star": median(&innocent),
            }),
        );
        records.extend(guilty);
        records.extend(innocent);
    }
    let mut extras = Extras::new();
    extras.insert("per_kappa".to_string(), serde_json::Value::Object(table));
    Ok((records, extras))
}

fn trigger_skew(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    let mut records = Vec::new();
    let mut table = serde_json::Map::new();
    for (i, &rate) in config.skew_rates.iter().enumerate() {
        let mut settings = config.channel.clone();
        settings.skew_rate = if rate > 0.0 { Some(rate) } else { None };
        let (model, c) = settings.resolve(
            config.code.q,
            config.code.m,
            Some(config.code.c0),
            derive_seed(config.seed, &[SALT_SKEW, i as u64]),
        )?;
        let bench = prepare_bench(config, model, c, None, i as u64)?;
        let label = format!("skew={rate}");
        let condition_records = run_condition(config, &bench, &label, i as u64, false)?;
        let mut ts: Vec<usize> = condition_records.iter().map(|r| r.t_star).collect();
        ts.sort_unstable();
        let median = match ts.len() {
            0 => 0.0,
            n if n % 2 == 1 => ts[n / 2] as f64,
            n => (ts[n / 2 - 1] + ts[n / 2]) as f64 / 2.0,
        };
        table.insert(
            label.clone(),
            serde_json::json!({
                "median_t_star": median,
                "undecided": condition_records
                    .iter()
                    .filter(|r| r.decision == Decision::Undecided)
                    .count(),
            }),
        );
        records.extend(condition_records);
    }
    let mut extras = Extras::new();
    extras.insert(
        "per_skew_rate".to_string(),
        serde_json::Value::Object(table),
    );
    Ok((records, extras))
}

/// One white-box trial: average the colluders' weights, apply the attack,
/// and accuse by thresholded projections.
#[allow(clippy::too_many_arguments)]
fn whitebox_trial(
    ensemble: &WhiteboxEnsemble,
    attack: WhiteboxAttack,
    prune_fraction: f64,
    finetune_sigma: f64,
    threshold: f64,
    c: usize,
    condition: &str,
    trial: usize,
    trial_seed: u64,
) -> Result<(TrialRecord, Vec<f64>)> {
    let n_users = ensemble.params.n_users;
    let mut crng = substream(trial_seed, &[purpose::COLLUSION_SAMPLE]);
    let colluders = sample_colluders(n_users, c, &mut crng)?;
    let merged = collude_average(ensemble, &colluders)?;
    let mut attack_rng = substream(trial_seed, &[purpose::WHITEBOX_ATTACK]);
    let released = match attack {
        WhiteboxAttack::None => merged,
        WhiteboxAttack::Finetune => attack_finetune(&merged, finetune_sigma, &mut attack_rng)?,
        WhiteboxAttack::Prune => attack_prune(
            &merged,
            prune_fraction,
            PruneMode::SmallestMagnitude,
            &mut attack_rng,
        )?,
    };
    let projections = ensemble.project_all(&released)?;
    let accused_pairs = accuse_whitebox(ensemble, &released, threshold)?;
    let accused: Vec<usize> = accused_pairs.iter().map(|&(j, _)| j).collect();
    let scores: Vec<f64> = accused_pairs.iter().map(|&(_, r)| r).collect();
    let decision = if accused.is_empty() {
        Decision::Exonerated
    } else {
        Decision::Accused
    };
    Ok((
        TrialRecord {
            trial,
            condition: condition.to_string(),
            decision,
            t_star: 0,
            accused,
            colluders,
            scores,
        },
        projections,
    ))
}

fn whitebox(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    let wb = &config.whitebox;
    let params = wb.to_params(config.n_users, derive_seed(config.seed, &[SALT_WHITEBOX]))?;
    let ensemble = embed_users(&params)?;
    let threshold = wb
        .threshold
        .unwrap_or_else(|| default_threshold(config.code.c0, wb.p_dim));

    let mut records = Vec::new();
    let mut table = serde_json::Map::new();
    let mut bench_idx = 0u64;
    for &c in &wb.collusion_sizes {
        for &attack in &wb.attacks {
            let condition = format!("c={c}/attack={attack}");
            let outcomes: Vec<(TrialRecord, Vec<f64>)> = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let trial_seed =
                        derive_seed(config.seed, &[SALT_TRIAL, bench_idx, trial as u64]);
                    whitebox_trial(
                        &ensemble,
                        attack,
                        wb.prune_fraction,
                        wb.finetune_sigma,
                        threshold,
                        c,
                        &condition,
                        trial,
                        trial_seed,
                    )
                    .map_err(|e| Error::config(format!("trial {trial} ({condition}): {e}")))
                })
                .collect::<Result<_>>()?;

            let mut col = Vec::new();
            let mut inn = Vec::new();
            for (record, projections) in &outcomes {
                for (j, &r_j) in projections.iter().enumerate() {
                    if record.colluders.contains(&j) {
                        col.push(r_j);
                    } else {
                        inn.push(r_j);
                    }
                }
            }
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            let col_mean = mean(&col);
            let inn_mean = mean(&inn);
            let inn_sd = (inn
                .iter()
                .map(|&x| (x - inn_mean) * (x - inn_mean))
                .sum::<f64>()
                / inn.len().max(1) as f64)
                .sqrt();
            let ideal = 1.0 / (c as f64).sqrt();
            table.insert(
                condition.clone(),
                serde_json::json!({
                    "colluder_mean_r": col_mean,
                    "ideal_mean_r": ideal,
                    "relative_deviation": (col_mean - ideal).abs() / ideal,
                    "innocent_mean_r": inn_mean,
                    "innocent_sd_r": inn_sd,
                    "separation_in_sd": if inn_sd > 0.0 { (col_mean - inn_mean) / inn_sd } else { f64::INFINITY },
                }),
            );
            records.extend(outcomes.into_iter().map(|(record, _)| record));
            bench_idx += 1;
        }
    }
    let mut extras = Extras::new();
    extras.insert(
        "threshold".to_string(),
        serde_json::json!({"value": threshold, "tuned_beta": ensemble.beta()}),
    );
    extras.insert(
        "per_condition".to_string(),
        serde_json::Value::Object(table),
    );
    Ok((records, extras))
}

/// Merge draws per sampled colluder set when measuring violation rates.
const MA_DRAWS_PER_SET: usize = 200;

fn ma_table(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Extras)> {
    let names: Vec<String> = if config.presets.is_empty() {
        CHANNEL_PRESETS
            .iter()
            .map(|&(n, _)| n.to_string())
            .collect()
    } else {
        config.presets.clone()
    };
    let params = config
        .code
        .to_params(derive_seed(config.seed, &[SALT_CODEBOOK, 0]))?;
    let cb = generate_codebook(&params, config.n_users)?;

    let mut table = serde_json::Map::new();
    for (i, name) in names.iter().enumerate() {
        let model = ChannelModel::from_preset(name)?;
        let c = preset_collusion_size(name)?;
        let rates: Vec<f64> = (0..config.trials)
            .into_par_iter()
            .map(|k| {
                let set_seed = derive_seed(config.seed, &[SALT_TRIAL, i as u64, k as u64]);
                let mut crng = substream(set_seed, &[purpose::COLLUSION_SAMPLE]);
                let colluders = sample_colluders(cb.n_users(), c, &mut crng)?;
                let spec = model.spec(colluders, set_seed)?;
                let mut mrng = substream(set_seed, &[purpose::ESTIMATION]);
                measure_ma_violation_rate(&spec, &cb, MA_DRAWS_PER_SET, &mut mrng)
            })
            .collect::<Result<_>>()?;
        let measured = rates.iter().sum::<f64>() / rates.len() as f64;
        let configured = model.ma_violation_rate;
        let draws = (config.trials * MA_DRAWS_PER_SET) as f64;
        let std_err = (configured * (1.0 - configured) / draws).sqrt();
        let within = if configured == 0.0 {
            measured == 0.0
        } else {
            (measured - configured).abs() <= 3.0 * std_err
        };
        table.insert(
            name.clone(),
            serde_json::json!({
                "configured_rate": configured,
                "measured_rate": measured,
                "merge_draws": draws,
                "std_err": std_err,
                "within_3_sigma": within,
            }),
        );
    }
    let mut extras = Extras::new();
    extras.insert(
        "violation_rates".to_string(),
        serde_json::Value::Object(table),
    );
    Ok((Vec::new(), extras))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ChannelSettings, CodeSettings, WhiteboxSettings};

    fn tiny_config(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: Some(kind),
            code: CodeSettings {
                m: 100,
                ..Default::default()
            },
            n_users: 10,
            trials: 10,
            estimation_trials: 40,
            channel: ChannelSettings {
                c: Some(2),
                ..ChannelSettings::default()
            },
            whitebox: WhiteboxSettings {
                l: 512,
                p_dim: 32,
                collusion_sizes: vec![1, 2],
                ..Default::default()
            },
            kappa_values: vec![0.1, 100.0],
            skew_rates: vec![0.0, 0.3],
            ..Default::default()
        }
    }

    #[test]
    fn single_leaker_identity_trial_accuses_the_leaker() {
        let mut cfg = tiny_config(ExperimentKind::Simulate);
        cfg.trials = 1;
        cfg.channel.c = Some(1);
        cfg.sprt.eps1 = 1e-4;
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.records.len(), 1);
        let r = &result.records[0];
        assert_eq!(r.decision, Decision::Accused);
        assert_eq!(r.colluders.len(), 1);
        assert!(r.accused.iter().all(|j| r.colluders.contains(j)));
        assert_eq!(r.accused.len(), r.scores.len());
    }

    #[test]
    fn aggregates_are_recomputable_from_records() {
        let cfg = tiny_config(ExperimentKind::Simulate);
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(aggregate(&result.records), result.aggregates);
        let summary = result.aggregates.by_condition.values().next().unwrap();
        assert_eq!(summary.trials, 10);
        assert_eq!(
            summary.accused_trials + summary.exonerated_trials + summary.undecided_trials,
            10
        );
        let hist_total: u64 = summary.t_star_histogram.values().sum();
        assert_eq!(hist_total, 10);
    }

    #[test]
    fn same_config_same_result_any_thread_count() {
        let cfg = tiny_config(ExperimentKind::Simulate);
        let one = run_with_threads(&cfg, Some(1)).unwrap();
        let four = run_with_threads(&cfg, Some(4)).unwrap();
        assert_eq!(one, four);
        let json_one = serde_json::to_string(&one).unwrap();
        let json_four = serde_json::to_string(&four).unwrap();
        assert_eq!(json_one, json_four);
    }

    #[test]
    fn baseline_comparison_reports_totals() {
        let mut cfg = tiny_config(ExperimentKind::BaselineCompare);
        cfg.n_users = 10;
        let result = run_experiment(&cfg).unwrap();
        let baseline = &result.extras["baseline"];
        // eps1 = 1e-6 at q = 10 needs six all-correct private queries.
        assert_eq!(baseline["per_user_queries"], 6);
        assert_eq!(baseline["total_queries"], 60);
        assert!(result.extras["proposed"]["every_trial_cheaper"]
            .as_bool()
            .unwrap());
    }

    #[test]
    fn kappa_sweep_emits_both_arms_per_value() {
        let mut cfg = tiny_config(ExperimentKind::SweepKappa);
        cfg.trials = 5;
        let result = run_experiment(&cfg).unwrap();
        let conditions: Vec<&String> = result.aggregates.by_condition.keys().collect();
        assert_eq!(
            conditions,
            vec![
                "kappa=0.1/guilty",
                "kappa=0.1/innocent",
                "kappa=100/guilty",
                "kappa=100/innocent"
            ]
        );
        let table = result.extras["per_kappa"].as_object().unwrap();
        assert!(table.contains_key("kappa=0.1") && table.contains_key("kappa=100"));
        // Innocent trials never implicate anyone here.
        for r in result
            .records
            .iter()
            .filter(|r| r.condition.ends_with("innocent"))
        {
            assert!(r.colluders.is_empty());
            assert_ne!(r.decision, Decision::Accused);
        }
    }

    #[test]
    fn skew_zero_matches_plain_channel() {
        let mut cfg = tiny_config(ExperimentKind::TriggerSkew);
        cfg.trials = 5;
        cfg.skew_rates = vec![0.0];
        let skew_result = run_experiment(&cfg).unwrap();

        let mut plain = tiny_config(ExperimentKind::Simulate);
        plain.trials = 5;
        plain.seed = cfg.seed;
        let plain_result = run_experiment(&plain).unwrap();

        // Identical trials up to the condition label.
        for (a, b) in skew_result.records.iter().zip(&plain_result.records) {
            assert_eq!(a.decision, b.decision);
            assert_eq!(a.t_star, b.t_star);
            assert_eq!(a.accused, b.accused);
            assert_eq!(a.colluders, b.colluders);
        }
    }

    #[test]
    fn whitebox_experiment_summarizes_projections() {
        let mut cfg = tiny_config(ExperimentKind::Whitebox);
        cfg.trials = 20;
        cfg.whitebox.attacks = vec![WhiteboxAttack::None];
        cfg.whitebox.noise_sigma = 0.0;
        cfg.whitebox.embed_strength = 1e6;
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.records.len(), 2 * 20);
        let table = result.extras["per_condition"].as_object().unwrap();
        for c in [1usize, 2] {
            let entry = &table[&format!("c={c}/attack=none")];
            let dev = entry["relative_deviation"].as_f64().unwrap();
            assert!(dev < 0.1, "c={c}: deviation {dev}");
            assert!(entry["innocent_mean_r"].as_f64().unwrap().abs() < 0.05);
        }
        // Without attacks every colluder set is fully identified.
        for r in &result.records {
            assert_eq!(r.decision, Decision::Accused);
            assert_eq!(r.accused.len(), r.colluders.len());
        }
    }

    #[test]
    fn ma_table_measures_all_presets() {
        let mut cfg = tiny_config(ExperimentKind::MaTable);
        cfg.trials = 20;
        let result = run_experiment(&cfg).unwrap();
        let table = result.extras["violation_rates"].as_object().unwrap();
        assert_eq!(table.len(), CHANNEL_PRESETS.len());
        for (name, _) in CHANNEL_PRESETS {
            let entry = &table[name];
            assert!(
                entry["within_3_sigma"].as_bool().unwrap(),
                "{name}: {entry}"
            );
        }
        assert_eq!(
            table["single/no-attack"]["measured_rate"].as_f64().unwrap(),
            0.0
        );
    }
}
