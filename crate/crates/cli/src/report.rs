use std::io::Write;

use btpgame::games::{CrossMatchRates, GameResult};
use btpgame::metrics::{AdvantageEstimate, MValue, MatchRateStats};
use btpgame::verify::{Theorem, TheoremVerdict};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Bumped whenever the report layout changes; matches
/// `docs/report.schema.json`.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo { name: "btpgame".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Theorem>,
}

/// One estimated rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricEntry {
    pub metric: String,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub std_error: f64,
    pub trials: u64,
    /// Enumeration value, when the dimension allows it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

impl MetricEntry {
    pub fn new(metric: &str, est: AdvantageEstimate, exact: Option<f64>) -> Self {
        MetricEntry {
            metric: metric.into(),
            estimate: est.point,
            ci: [est.ci_low, est.ci_high],
            std_error: est.std_error,
            trials: est.trials,
            exact,
        }
    }
}

/// Extremal quantities the games are scored against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalBlock {
    pub tau: u32,
    pub m_tau: MValue,
    pub m_pi: MValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tau: Option<MValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tau: Option<MValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_rate: Option<MatchRateStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_rate_exact: Option<MatchRateStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diversity_entropy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub command: CommandEcho,
    pub config: ExperimentConfig,
    pub metrics: Vec<MetricEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalBlock>,
    pub games: Vec<GameResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_match: Option<CrossMatchRates>,
    pub theorems: Vec<TheoremVerdict>,
    pub notes: Vec<String>,
    /// The only field that varies between identical runs.
    pub timings: Timings,
}

impl ExperimentReport {
    pub fn new(command: CommandEcho, config: ExperimentConfig) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION.into(),
            tool: ToolInfo::default(),
            command,
            config,
            metrics: Vec::new(),
            extremal: None,
            games: Vec::new(),
            cross_match: None,
            theorems: Vec::new(),
            notes: Vec::new(),
            timings: Timings { wall_clock_seconds: 0.0 },
        }
    }

    /// Rows of the tabular export: metrics, then game rates.
    pub fn rows(&self) -> Vec<CsvRow> {
        let mut rows: Vec<CsvRow> = self.metrics.iter().map(CsvRow::from).collect();
        for game in &self.games {
            rows.push(CsvRow::estimate(&format!("{}.win_rate", game.game), &game.win_rate));
            rows.push(CsvRow::estimate(&format!("{}.advantage", game.game), &game.advantage));
        }
        if let Some(cm) = &self.cross_match {
            rows.push(CsvRow::estimate("cross-match.fcmr", &cm.fcmr));
            rows.push(CsvRow::estimate("cross-match.fncmr", &cm.fncmr));
            rows.push(CsvRow::estimate("cross-match.unlink_advantage", &cm.unlink.advantage));
        }
        rows
    }

    pub fn write_json(&self, out: impl Write) -> Result<(), CliError> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| CliError::Output(e.to_string()))?;
        writeln!(out).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), CliError> {
        let mut writer = csv::Writer::from_writer(out);
        for row in self.rows() {
            writer.serialize(row).map_err(|e| CliError::Output(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::Output(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub name: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl CsvRow {
    fn estimate(name: &str, est: &AdvantageEstimate) -> Self {
        CsvRow { name: name.into(), estimate: est.point, ci_low: est.ci_low, ci_high: est.ci_high, trials: est.trials }
    }
}

impl From<&MetricEntry> for CsvRow {
    fn from(m: &MetricEntry) -> Self {
        CsvRow { name: m.metric.clone(), estimate: m.estimate, ci_low: m.ci[0], ci_high: m.ci[1], trials: m.trials }
    }
}
