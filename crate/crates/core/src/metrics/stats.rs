//! Proportion estimates with confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// How confidence intervals for proportions are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    #[default]
    Wilson,
    /// Normal approximation around the sample proportion.
    Wald,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub level: f64,
    #[serde(default)]
    pub method: IntervalMethod,
}

impl Confidence {
    pub const NINETY_FIVE: Confidence = Confidence { level: 0.95, method: IntervalMethod::Wilson };
    pub const NINETY_NINE: Confidence = Confidence { level: 0.99, method: IntervalMethod::Wilson };

    pub fn z(&self) -> f64 {
        z_score(self.level)
    }
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence::NINETY_FIVE
    }
}

/// Two-sided standard normal quantile for the given coverage.
pub fn z_score(level: f64) -> f64 {
    assert!(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + level / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

fn wald_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let p = successes as f64 / trials as f64;
    let half = z * (p * (1.0 - p) / trials as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// A point estimate with its sampling uncertainty and oracle accounting.
///
/// For plain rates the point is the sample proportion. Game advantages are
/// derived from a rate by [`AdvantageEstimate::shifted`] or
/// [`AdvantageEstimate::unlink_advantage`], which carry the interval along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub point: f64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Standard error of `point`.
    pub std_error: f64,
    pub queries_used: u64,
}

impl AdvantageEstimate {
    pub fn from_counts(successes: u64, trials: u64, confidence: Confidence) -> Self {
        assert!(successes <= trials, "{successes} successes out of {trials} trials");
        let z = confidence.z();
        let (ci_low, ci_high) = match confidence.method {
            IntervalMethod::Wilson => wilson_interval(successes, trials, z),
            IntervalMethod::Wald => wald_interval(successes, trials, z),
        };
        let point = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        let std_error = if trials == 0 { 0.5 } else { (point * (1.0 - point) / trials as f64).sqrt() };
        AdvantageEstimate { point, trials, ci_low: ci_low.min(point), ci_high: ci_high.max(point), std_error, queries_used: 0 }
    }

    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        AdvantageEstimate { point: value, trials: 0, ci_low: value, ci_high: value, std_error: 0.0, queries_used: 0 }
    }

    pub fn with_queries(mut self, queries: u64) -> Self {
        self.queries_used = queries;
        self
    }

    /// `rate - baseline`, the signed advantage of the irreversibility games.
    pub fn shifted(self, baseline: f64) -> Self {
        AdvantageEstimate { point: self.point - baseline, ci_low: self.ci_low - baseline, ci_high: self.ci_high - baseline, ..self }
    }

    /// `|2 w - 1|` for a win rate `w`.
    pub fn unlink_advantage(self) -> Self {
        let map = |w: f64| 2.0 * w - 1.0;
        let (lo, hi) = (map(self.ci_low), map(self.ci_high));
        let (ci_low, ci_high) =
            if lo <= 0.0 && hi >= 0.0 { (0.0, lo.abs().max(hi.abs())) } else { (lo.abs().min(hi.abs()), lo.abs().max(hi.abs())) };
        AdvantageEstimate { point: map(self.point).abs(), ci_low, ci_high, std_error: 2.0 * self.std_error, ..self }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}
