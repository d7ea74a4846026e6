//! JSON run configuration.
//!
//! ```json
//! {
//!   "filter": { "family": "tikhonov" },
//!   "grid_ratio": 1.2,
//!   "sigmas": [3.0517578125e-05, 1.52587890625e-05],
//!   "replications": 200,
//!   "master_seed": 7,
//!   "modes": 1024,
//!   "simulate_rates": { "truth": "hat" }
//! }
//! ```
//!
//! Unknown keys anywhere are rejected. Each command reads its own block and
//! refuses blocks meant for another command.

use std::path::{Path, PathBuf};

use invreg_core::problems::{GreenNoise, TestFunction};
use invreg_core::select::{Rule, DEFAULT_GRID_RATIO};
use invreg_core::{FilterFamily, FilterSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterConfig {
    // empty braces make serde reject stray keys on these variants too
    SpectralCutoff {},
    Tikhonov {},
    IteratedTikhonov { m: u32 },
    Landweber {},
    Showalter {},
}

impl FilterConfig {
    pub fn to_spec(self) -> Result<FilterSpec, CliError> {
        let family = match self {
            FilterConfig::SpectralCutoff {} => FilterFamily::SpectralCutoff,
            FilterConfig::Tikhonov {} => FilterFamily::Tikhonov,
            FilterConfig::IteratedTikhonov { m } => FilterFamily::IteratedTikhonov(m),
            FilterConfig::Landweber {} => FilterFamily::Landweber,
            FilterConfig::Showalter {} => FilterFamily::Showalter,
        };
        FilterSpec::new(family).map_err(|e| CliError::Config(format!("filter: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthConfig {
    Hat,
    Indicator,
}

impl From<TruthConfig> for TestFunction {
    fn from(t: TruthConfig) -> Self {
        match t {
            TruthConfig::Hat => TestFunction::HatFunction,
            TruthConfig::Indicator => TestFunction::Indicator,
        }
    }
}

/// `sampled`: `sigma` is white noise on `modes` equispaced samples of the
/// data. `coefficient`: `sigma` is the noise on every sine coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConfig {
    #[default]
    Sampled,
    Coefficient,
}

impl From<NoiseConfig> for GreenNoise {
    fn from(n: NoiseConfig) -> Self {
        match n {
            NoiseConfig::Sampled => GreenNoise::Sampled,
            NoiseConfig::Coefficient => GreenNoise::Coefficient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConfig {
    Oracle,
    Pred,
    Lepskii,
}

impl From<RuleConfig> for Rule {
    fn from(r: RuleConfig) -> Self {
        match r {
            RuleConfig::Oracle => Rule::Oracle,
            RuleConfig::Pred => Rule::Pred,
            RuleConfig::Lepskii => Rule::Lepskii,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRates {
    pub truth: TruthConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateEfficiency {
    #[serde(default = "default_decay")]
    pub a: f64,
    #[serde(default = "default_decay")]
    pub nu: f64,
    #[serde(default = "default_diagonal_size")]
    pub n: usize,
}

impl Default for SimulateEfficiency {
    fn default() -> Self {
        Self {
            a: default_decay(),
            nu: default_decay(),
            n: default_diagonal_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTestBlock {
    /// Per-replication error CSV; relative paths resolve against the config
    /// file's directory.
    pub input: PathBuf,
    #[serde(default = "default_rule")]
    pub column: RuleConfig,
    pub theta_target: f64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreCurve {
    pub truth: TruthConfig,
    pub sigma: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub replicate: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersCheck {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for FiltersCheck {
    fn default() -> Self {
        Self {
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    #[serde(default = "default_grid_ratio")]
    pub grid_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate_rates: Option<SimulateRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate_efficiency: Option<SimulateEfficiency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_test: Option<RateTestBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_curve: Option<ScoreCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters_check: Option<FiltersCheck>,
}

fn default_grid_ratio() -> f64 {
    DEFAULT_GRID_RATIO
}

fn default_modes() -> usize {
    1024
}

fn default_decay() -> f64 {
    4.0
}

fn default_diagonal_size() -> usize {
    300
}

fn default_rule() -> RuleConfig {
    RuleConfig::Pred
}

fn default_levels() -> Vec<f64> {
    vec![0.1]
}

fn default_samples() -> usize {
    1000
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks shared fields and that only `command`'s block is present.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if !(self.grid_ratio > 1.0) || !self.grid_ratio.is_finite() {
            return Err(field(
                "grid_ratio",
                format!("must exceed 1, got {}", self.grid_ratio),
            ));
        }
        if let Some(sigmas) = &self.sigmas {
            if sigmas.is_empty() {
                return Err(field("sigmas", "must not be empty"));
            }
            if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
                return Err(field(
                    "sigmas",
                    format!("must be positive and finite, got {bad}"),
                ));
            }
        }
        if let Some(m) = self.replications {
            if m < 2 {
                return Err(field(
                    "replications",
                    format!("must be at least 2, got {m}"),
                ));
            }
        }
        if self.modes < 1 {
            return Err(field("modes", "must be at least 1"));
        }
        if let Some(filter) = self.filter {
            filter.to_spec()?;
        }
        let present = [
            (
                "simulate_rates",
                self.simulate_rates.is_some(),
                Command::SimulateRates,
            ),
            (
                "simulate_efficiency",
                self.simulate_efficiency.is_some(),
                Command::SimulateEfficiency,
            ),
            ("rate_test", self.rate_test.is_some(), Command::RateTest),
            (
                "score_curve",
                self.score_curve.is_some(),
                Command::ScoreCurve,
            ),
            (
                "filters_check",
                self.filters_check.is_some(),
                Command::FiltersCheck,
            ),
        ];
        for (key, is_present, owner) in present {
            if is_present && owner != command {
                return Err(field(
                    key,
                    format!("block does not apply to command {}", command.name()),
                ));
            }
        }
        Ok(())
    }

    pub fn filter_spec(&self) -> Result<FilterSpec, CliError> {
        self.filter.unwrap_or(FilterConfig::Tikhonov {}).to_spec()
    }
}

pub(crate) fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}
