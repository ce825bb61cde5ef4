//! Experiment configuration: a serde schema accepted as TOML or JSON.
//!
//! Defaults are desk-scale (m = 200, 100 trials, 20 users) so an empty
//! config runs in seconds; `apply_paper_scale` switches to the full-size
//! campaign (m = 1000, 500 trials, 100 users).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::accusation::SprtConfig;
use crate::channel::{preset_collusion_size, preset_rho, ChannelModel, CollusionStrategy};
use crate::codebook::{derive_tau, Symbol, TardosParams};
use crate::error::{Error, Result};
use crate::rng::{purpose, substream};
use crate::whitebox::WhiteboxParams;
use rand::Rng;

/// Which experiment a config drives (also selected by CLI subcommand).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Collusion trials against one fixed channel.
    Simulate,
    /// Shared-trigger scheme vs. per-user independent triggers.
    BaselineCompare,
    /// Decision-time distributions across bias-spread values.
    SweepKappa,
    /// Decision-time distributions across trigger label skew rates.
    TriggerSkew,
    /// Weight-space projection statistics under collusion and attacks.
    Whitebox,
    /// Measured marking-violation rate per channel preset.
    MaTable,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::BaselineCompare => "baseline-compare",
            ExperimentKind::SweepKappa => "sweep-kappa",
            ExperimentKind::TriggerSkew => "trigger-skew",
            ExperimentKind::Whitebox => "whitebox",
            ExperimentKind::MaTable => "ma-table",
        };
        f.write_str(s)
    }
}

/// Code parameters (`[code]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeSettings {
    /// Alphabet size.
    pub q: usize,
    /// Code length (number of trigger positions).
    pub m: usize,
    /// Bias spread.
    pub kappa: f64,
    /// Largest collusion the code is dimensioned against.
    pub c0: usize,
    /// Explicit bias cutoff; derived from `c0` and `kappa` when absent.
    pub tau: Option<f64>,
}

impl Default for CodeSettings {
    fn default() -> Self {
        CodeSettings {
            q: 10,
            m: 200,
            kappa: 0.1,
            c0: 6,
            tau: None,
        }
    }
}

impl CodeSettings {
    pub fn to_params(&self, seed: u64) -> Result<TardosParams> {
        match self.tau {
            Some(tau) => TardosParams::with_tau(self.q, self.m, self.kappa, self.c0, tau, seed),
            None => TardosParams::new(self.q, self.m, self.kappa, self.c0, seed),
        }
    }

    /// Params with `kappa` overridden but the cutoff held fixed, so
    /// bias-spread sweeps isolate the spread effect (and large `kappa`
    /// values, whose derived cutoff would be infeasible, stay valid).
    pub fn to_params_with_kappa(&self, kappa: f64, seed: u64) -> Result<TardosParams> {
        let tau = match self.tau {
            Some(tau) => tau,
            None => derive_tau(self.c0, 1.0 / self.q as f64)?,
        };
        TardosParams::with_tau(self.q, self.m, kappa, self.c0, tau, seed)
    }
}

/// Sequential-test settings (`[sprt]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SprtSettings {
    /// Target false-positive rate.
    pub eps1: f64,
    /// Target false-negative rate.
    pub eps2: f64,
    pub log_base: f64,
}

impl Default for SprtSettings {
    fn default() -> Self {
        SprtSettings {
            eps1: 1e-6,
            eps2: 1e-3,
            log_base: 10.0,
        }
    }
}

impl SprtSettings {
    pub fn to_config(&self) -> Result<SprtConfig> {
        SprtConfig::derive_with_base(self.eps1, self.eps2, self.log_base)
    }
}

/// Collusion channel settings (`[channel]` section): either a named preset
/// or an explicit strategy, with optional trigger label skew on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSettings {
    /// Preset name like `c2/fine-tune`; fixes strategy, violation rate,
    /// and collusion size.
    pub preset: Option<String>,
    /// Merge strategy (default majority) when no preset is given.
    pub strategy: Option<CollusionStrategy>,
    /// Marking-violation rate (default 0) when no preset is given.
    pub rho: Option<f64>,
    /// Collusion size; defaults to the code's `c0` when no preset is given.
    pub c: Option<usize>,
    /// Fraction of positions answered with the trigger input's true label.
    pub skew_rate: Option<f64>,
}

/// Uniform random true labels for every trigger position, used when a skew
/// rate is configured without observed labels.
pub fn random_trigger_labels(q: usize, m: usize, seed: u64) -> Vec<Symbol> {
    let mut rng = substream(seed, &[purpose::SKEW_LABELS]);
    (0..m).map(|_| rng.gen_range(0..q) as Symbol).collect()
}

impl ChannelSettings {
    /// Concrete channel model and collusion size. `default_c` backs the
    /// collusion size for preset-less configs (callers pass the code's
    /// `c0`); `seed` feeds the skew label draw.
    pub fn resolve(
        &self,
        q: usize,
        m: usize,
        default_c: Option<usize>,
        seed: u64,
    ) -> Result<(ChannelModel, usize)> {
        let (mut model, c) = match &self.preset {
            Some(name) => {
                if self.strategy.is_some() || self.rho.is_some() || self.c.is_some() {
                    return Err(Error::config(
                        "channel.preset cannot be combined with explicit strategy/rho/c"
                            .to_string(),
                    ));
                }
                (
                    ChannelModel::from_preset(name)?,
                    preset_collusion_size(name)?,
                )
            }
            None => {
                let strategy = self.strategy.unwrap_or(CollusionStrategy::Majority);
                let model = ChannelModel::new(strategy, self.rho.unwrap_or(0.0))?;
                let c = self.c.or(default_c).ok_or_else(|| {
                    Error::config("channel.c (collusion size) is required".to_string())
                })?;
                (model, c)
            }
        };
        if c < 1 {
            return Err(Error::config(
                "collusion size must be at least 1".to_string(),
            ));
        }
        if let Some(rate) = self.skew_rate {
            if rate > 0.0 {
                model = model.with_skew(rate, random_trigger_labels(q, m, seed))?;
            }
        }
        model.validate_for(q, m)?;
        Ok((model, c))
    }

    /// A short, filename-friendly description of the resolved channel.
    pub fn label(&self, c: usize) -> String {
        let base = match &self.preset {
            Some(name) => name.clone(),
            None => {
                let strategy = self.strategy.unwrap_or(CollusionStrategy::Majority);
                let rho = self.rho.unwrap_or(0.0);
                format!("{strategy}/rho={rho}/c={c}")
            }
        };
        match self.skew_rate {
            Some(rate) if rate > 0.0 => format!("{base}/skew={rate}"),
            _ => base,
        }
    }
}

/// Which weight-space attack the colluders apply before release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhiteboxAttack {
    None,
    Finetune,
    Prune,
}

impl fmt::Display for WhiteboxAttack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WhiteboxAttack::None => "none",
            WhiteboxAttack::Finetune => "finetune",
            WhiteboxAttack::Prune => "prune",
        };
        f.write_str(s)
    }
}

/// White-box ensemble settings (`[whitebox]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WhiteboxSettings {
    /// Weight-vector length.
    pub l: usize,
    /// Projection-space dimension (needs `n_users <= p_dim <= l`).
    pub p_dim: usize,
    pub noise_sigma: f64,
    pub embed_target: f64,
    pub embed_strength: f64,
    pub collusion_sizes: Vec<usize>,
    pub attacks: Vec<WhiteboxAttack>,
    pub prune_fraction: f64,
    pub finetune_sigma: f64,
    /// Accusation threshold; derived from `c0` and `p_dim` when absent.
    pub threshold: Option<f64>,
}

impl Default for WhiteboxSettings {
    fn default() -> Self {
        WhiteboxSettings {
            l: 2048,
            p_dim: 128,
            noise_sigma: crate::whitebox::DEFAULT_NOISE_SIGMA,
            embed_target: crate::whitebox::DEFAULT_EMBED_TARGET,
            embed_strength: 1.0,
            collusion_sizes: vec![1, 2, 4, 6],
            attacks: vec![
                WhiteboxAttack::None,
                WhiteboxAttack::Finetune,
                WhiteboxAttack::Prune,
            ],
            prune_fraction: 0.8,
            finetune_sigma: 0.1,
            threshold: None,
        }
    }
}

impl WhiteboxSettings {
    pub fn to_params(&self, n_users: usize, seed: u64) -> Result<WhiteboxParams> {
        WhiteboxParams::new(self.l, self.p_dim, n_users, seed)?
            .with_noise_sigma(self.noise_sigma)?
            .with_embed_target(self.embed_target)?
            .with_embed_strength(self.embed_strength)
    }

    pub fn validate(&self, n_users: usize) -> Result<()> {
        self.to_params(n_users, 0)?;
        if self.collusion_sizes.is_empty() {
            return Err(Error::config(
                "whitebox.collusion_sizes must be non-empty".to_string(),
            ));
        }
        if let Some(&bad) = self.collusion_sizes.iter().find(|&&c| c < 1 || c > n_users) {
            return Err(Error::config(format!(
                "whitebox collusion size {bad} outside 1..={n_users}"
            )));
        }
        if self.attacks.is_empty() {
            return Err(Error::config(
                "whitebox.attacks must be non-empty".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(Error::config(format!(
                "whitebox.prune_fraction must lie in [0, 1), got {}",
                self.prune_fraction
            )));
        }
        if !self.finetune_sigma.is_finite() || self.finetune_sigma < 0.0 {
            return Err(Error::config(format!(
                "whitebox.finetune_sigma must be nonnegative, got {}",
                self.finetune_sigma
            )));
        }
        Ok(())
    }
}

/// Top-level experiment recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Optional; the CLI subcommand also selects it and must agree.
    pub experiment: Option<ExperimentKind>,
    pub code: CodeSettings,
    pub n_users: usize,
    pub sprt: SprtSettings,
    pub channel: ChannelSettings,
    pub whitebox: WhiteboxSettings,
    /// Monte Carlo trials per condition.
    pub trials: usize,
    /// Sampled collusions for score-distribution estimation.
    pub estimation_trials: usize,
    /// Master seed; every stream in the run derives from it.
    pub seed: u64,
    /// Bias-spread values for `sweep-kappa`.
    pub kappa_values: Vec<f64>,
    /// Skew rates for `trigger-skew`.
    pub skew_rates: Vec<f64>,
    /// Preset names for `ma-table` (empty = all presets).
    pub presets: Vec<String>,
    /// Output directory; overridable with `--out`.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            code: CodeSettings::default(),
            n_users: 20,
            sprt: SprtSettings::default(),
            channel: ChannelSettings::default(),
            whitebox: WhiteboxSettings::default(),
            trials: 100,
            estimation_trials: 200,
            seed: 1789,
            kappa_values: vec![0.1, 100.0],
            skew_rates: vec![0.0, 0.1, 0.3],
            presets: Vec::new(),
            out_dir: None,
        }
    }
}

/// On-disk config format, inferred from the file extension.
fn parse_config(text: &str, prefer_toml: bool) -> Result<ExperimentConfig> {
    if prefer_toml {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid TOML config: {e}")))
    } else {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON config: {e}")))
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// Parse from TOML, falling back to JSON.
    fn from_str(text: &str) -> Result<Self> {
        match parse_config(text, true) {
            Ok(cfg) => Ok(cfg),
            Err(toml_err) => parse_config(text, false).map_err(|_| toml_err),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => parse_config(&text, true),
            Some("json") => parse_config(&text, false),
            _ => text.parse(),
        }
    }

    /// The experiment this config will run, reconciled with a CLI choice.
    pub fn resolve_kind(&mut self, from_cli: Option<ExperimentKind>) -> Result<ExperimentKind> {
        let kind = match (self.experiment, from_cli) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(format!(
                    "config requests experiment '{a}' but the subcommand is '{b}'"
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(Error::config(
                    "no experiment selected (set `experiment` or use a subcommand)".to_string(),
                ))
            }
        };
        self.experiment = Some(kind);
        Ok(kind)
    }

    /// Full-size campaign: m = 1000, 500 trials, 100 users.
    pub fn apply_paper_scale(&mut self) {
        self.code.m = 1000;
        self.trials = 500;
        self.n_users = 100;
        self.estimation_trials = 500;
    }

    /// Validate everything the selected experiment will touch.
    pub fn validate(&self) -> Result<()> {
        let kind = self
            .experiment
            .ok_or_else(|| Error::config("config has no experiment kind resolved".to_string()))?;
        if self.trials < 1 {
            return Err(Error::config("trials must be at least 1".to_string()));
        }
        if self.n_users < 1 {
            return Err(Error::config("n_users must be at least 1".to_string()));
        }
        self.sprt.to_config()?;
        if kind != ExperimentKind::Whitebox {
            self.code.to_params(self.seed)?;
            if self.estimation_trials < 1 {
                return Err(Error::config(
                    "estimation_trials must be at least 1".to_string(),
                ));
            }
        }
        match kind {
            ExperimentKind::Simulate | ExperimentKind::BaselineCompare => {
                let (_, c) = self.channel.resolve(
                    self.code.q,
                    self.code.m,
                    Some(self.code.c0),
                    self.seed,
                )?;
                let c = if kind == ExperimentKind::BaselineCompare {
                    1
                } else {
                    c
                };
                if c >= self.n_users {
                    return Err(Error::config(format!(
                        "collusion size {c} needs more than {} users for estimation",
                        self.n_users
                    )));
                }
            }
            ExperimentKind::SweepKappa => {
                if self.kappa_values.is_empty() {
                    return Err(Error::config("kappa_values must be non-empty".to_string()));
                }
                for &kappa in &self.kappa_values {
                    self.code.to_params_with_kappa(kappa, self.seed)?;
                }
                self.channel
                    .resolve(self.code.q, self.code.m, Some(self.code.c0), self.seed)?;
            }
            ExperimentKind::TriggerSkew => {
                if self.skew_rates.is_empty() {
                    return Err(Error::config("skew_rates must be non-empty".to_string()));
                }
                for &rate in &self.skew_rates {
                    if !rate.is_finite() || !(0.0..1.0).contains(&rate) {
                        return Err(Error::config(format!(
                            "skew rate must lie in [0, 1), got {rate}"
                        )));
                    }
                    let mut with_rate = self.channel.clone();
                    with_rate.skew_rate = if rate > 0.0 { Some(rate) } else { None };
                    with_rate.resolve(self.code.q, self.code.m, Some(self.code.c0), self.seed)?;
                }
            }
            ExperimentKind::Whitebox => {
                self.whitebox.validate(self.n_users)?;
            }
            ExperimentKind::MaTable => {
                for name in &self.presets {
                    preset_rho(name)?;
                    let c = preset_collusion_size(name)?;
                    if c > self.n_users {
                        return Err(Error::config(format!(
                            "preset '{name}' needs {c} colluders but only {} users exist",
                            self.n_users
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization; identifies the exact
    /// recipe in every output file.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialization is infallible");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// How results are materialized being outside the recipe (and its hash):
/// worker count and output overrides must not change the science.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Format of the aggregate artifact (per-trial records and histograms are
/// always CSV).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::config(format!(
                "unknown output format '{other}' (expected json or csv)"
            ))),
        }
    }
}
