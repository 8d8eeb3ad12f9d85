//! Problem configuration and the structured-text run configuration.
//!
//! A run configuration is a TOML document:
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! horizon = 4096
//! arms = 5
//! query_budget = 1024
//! confidence = 0.05        # optional, defaults to 0.05
//! variation_budget = 1.0   # optional
//!
//! [environment]
//! kind = "piecewise"       # piecewise | drift | hard_instance | file
//!
//! [hyque]
//! log_base = "natural"
//!
//! [rexp3b]
//! weight_reset = true
//! ```
//!
//! The `NSBANDIT_SEED` environment variable overrides `seed`.

use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::hyque::HyqueOptions;
use crate::rexp3b::Rexp3bOptions;

pub const DEFAULT_CONFIDENCE: f64 = 0.05;

/// Environment variable that overrides any configured seed.
pub const SEED_ENV_VAR: &str = "NSBANDIT_SEED";

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Number of rounds `T`.
    pub horizon: u64,
    /// Number of arms `K`.
    pub arms: usize,
    /// Maximum number of rounds with reward feedback `B`.
    pub query_budget: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation_budget: Option<f64>,
}

impl ProblemConfig {
    pub fn new(horizon: u64, arms: usize, query_budget: u64) -> Self {
        Self {
            horizon,
            arms,
            query_budget,
            confidence: DEFAULT_CONFIDENCE,
            variation_budget: None,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn with_variation(mut self, variation_budget: f64) -> Self {
        self.variation_budget = Some(variation_budget);
        self
    }

    pub fn validate(self) -> Result<ValidatedConfig> {
        validate_config(self)
    }
}

/// A [`ProblemConfig`] that passed [`validate_config`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedConfig(ProblemConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> ProblemConfig {
        self.0
    }

    /// The variation budget, or [`Error::MissingVariation`].
    pub fn require_variation(&self) -> Result<f64> {
        self.0.variation_budget.ok_or(Error::MissingVariation)
    }
}

impl Deref for ValidatedConfig {
    type Target = ProblemConfig;

    fn deref(&self) -> &ProblemConfig {
        &self.0
    }
}

pub fn validate_config(cfg: ProblemConfig) -> Result<ValidatedConfig> {
    if cfg.horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    if cfg.arms < 2 {
        return Err(Error::TooFewArms(cfg.arms));
    }
    if cfg.query_budget == 0 {
        return Err(Error::EmptyBudget);
    }
    if cfg.query_budget > cfg.horizon {
        return Err(Error::BudgetExceedsHorizon {
            budget: cfg.query_budget,
            horizon: cfg.horizon,
        });
    }
    if !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
        return Err(Error::BadConfidence(cfg.confidence));
    }
    if let Some(v) = cfg.variation_budget {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::VariationOutOfRange {
                value: v,
                low: 0.0,
                high: f64::INFINITY,
            });
        }
    }
    Ok(ValidatedConfig(cfg))
}

/// Checks the `1/K <= V_T <= B/K` regime required by the hard instance.
pub fn validate_hard_regime(cfg: &ValidatedConfig) -> Result<f64> {
    let v = cfg.require_variation()?;
    if cfg.query_budget < cfg.arms as u64 {
        return Err(Error::VariationOutOfRange {
            value: v,
            low: 1.0 / cfg.arms as f64,
            high: cfg.query_budget as f64 / cfg.arms as f64,
        });
    }
    let low = 1.0 / cfg.arms as f64;
    let high = cfg.query_budget as f64 / cfg.arms as f64;
    if v < low || v > high {
        return Err(Error::VariationOutOfRange {
            value: v,
            low,
            high,
        });
    }
    Ok(v)
}

/// Query budget ratio `b = ceil(2T / B)`.
pub fn budget_ratio(cfg: &ValidatedConfig) -> u64 {
    (2 * cfg.horizon).div_ceil(cfg.query_budget)
}

/// Everything needed to reproduce one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub hyque: HyqueOptions,
    #[serde(default)]
    pub rexp3b: Rexp3bOptions,
}

impl RunConfig {
    pub fn new(problem: ProblemConfig) -> Self {
        Self {
            seed: 0,
            problem,
            environment: EnvironmentSpec::default(),
            hyque: HyqueOptions::default(),
            rexp3b: Rexp3bOptions::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a config file and applies the `NSBANDIT_SEED` override.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(seed) = seed_override()? {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validated(&self) -> Result<ValidatedConfig> {
        validate_config(self.problem)
    }
}

/// Reads `NSBANDIT_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| Error::Parse(format!("{SEED_ENV_VAR}={raw:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Parse(format!("{SEED_ENV_VAR}: {e}"))),
    }
}
