use std::path::Path;

use btpgame::adversaries::PalSamplerConfig;
use btpgame::metrics::Confidence;
use btpgame::population::DEFAULT_QUERY_BUDGET;
use btpgame::schemes::SchemeConfig;
use btpgame::{LambdaSet, PopulationConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Named adversaries for each game family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarySelection {
    /// IRR adversary for `game al-irr` and `game pal-irr`.
    pub irr: String,
    /// UNLINK adversary for `game unlink` and `game cross-match`.
    pub unlink: String,
    /// IRR adversaries used by the theorem checks for `{PI}` and `{AD}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ad: Option<String>,
}

impl Default for AdversarySelection {
    fn default() -> Self {
        AdversarySelection { irr: "blind".into(), unlink: "appendix-b".into(), pi: None, ad: None }
    }
}

/// A full experiment description. Every field has a default, so `{}` is a
/// valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub population: PopulationConfig,
    pub scheme: SchemeConfig,
    /// Master seed of all experiment randomness. The population has its own
    /// seed so that reseeding an experiment keeps the same users.
    pub seed: u64,
    pub trials: u64,
    pub query_budget: u64,
    pub lambda: LambdaSet,
    pub tau: u32,
    pub adversaries: AdversarySelection,
    pub pal: PalSamplerConfig,
    pub confidence: Confidence,
    /// Templates, and probes per template, behind match-rate statistics.
    pub stats_templates: u64,
    pub stats_probes: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            population: PopulationConfig::default(),
            scheme: SchemeConfig::default(),
            seed: 1,
            trials: 10_000,
            query_budget: DEFAULT_QUERY_BUDGET,
            lambda: LambdaSet::PiAd,
            tau: 1,
            adversaries: AdversarySelection::default(),
            pal: PalSamplerConfig::default(),
            confidence: Confidence::default(),
            stats_templates: 2_000,
            stats_probes: 1_000,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be positive".into()));
        }
        if self.query_budget == 0 {
            return Err(CliError::Usage("query_budget must be positive".into()));
        }
        if !(self.confidence.level > 0.0 && self.confidence.level < 1.0) {
            return Err(CliError::Usage(format!("confidence level {} must lie in (0, 1)", self.confidence.level)));
        }
        if self.stats_templates == 0 || self.stats_probes == 0 {
            return Err(CliError::Usage("stats_templates and stats_probes must be positive".into()));
        }
        Ok(())
    }
}
