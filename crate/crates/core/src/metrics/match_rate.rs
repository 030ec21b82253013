use serde::{Deserialize, Serialize};

use crate::error::{BtpError, Result};

/// Distribution summary of the per-template match rate `MR_Pi(pi, alpha)`
/// over `(pi, alpha) <- PIE(X(U))`.
///
/// `std_dev` is the population standard deviation of that random variable.
/// When the per-template rates are themselves Monte Carlo estimates, their
/// binomial noise is subtracted from the spread before taking the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRateStats {
    pub mean: f64,
    pub std_dev: f64,
    pub variation_coeff: f64,
    pub mean_se: f64,
    pub std_dev_se: f64,
    /// Templates rated; zero for exact statistics.
    pub templates: u64,
    pub inner_trials: u64,
    #[serde(skip)]
    pub rates: Vec<f64>,
}

impl MatchRateStats {
    pub fn exact(mean: f64, std_dev: f64) -> Result<Self> {
        if mean <= 0.0 {
            return Err(BtpError::UndefinedVariation);
        }
        Ok(MatchRateStats {
            mean,
            std_dev,
            variation_coeff: std_dev / mean,
            mean_se: 0.0,
            std_dev_se: 0.0,
            templates: 0,
            inner_trials: 0,
            rates: Vec::new(),
        })
    }

    /// Summarises Monte Carlo rates, each the fraction of `inner` probes
    /// accepted by one template.
    pub fn from_rates(rates: Vec<f64>, inner: u64) -> Result<Self> {
        let count = rates.len() as f64;
        if rates.is_empty() {
            return Err(BtpError::config("match-rate statistics need at least one template"));
        }
        let mean = rates.iter().sum::<f64>() / count;
        if mean <= 0.0 {
            return Err(BtpError::UndefinedVariation);
        }
        let raw_var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / count;
        let noise = if inner > 1 { rates.iter().map(|r| r * (1.0 - r)).sum::<f64>() / count / (inner - 1) as f64 } else { 0.0 };
        let var = (raw_var - noise).max(0.0);
        let std_dev = var.sqrt();
        let m4 = rates.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / count;
        let var_se = ((m4 - raw_var * raw_var).max(0.0) / count).sqrt();
        let std_dev_se = if std_dev > 0.0 { var_se / (2.0 * std_dev) } else { var_se.sqrt() };
        let sample_var = if rates.len() > 1 { raw_var * count / (count - 1.0) } else { raw_var };
        Ok(MatchRateStats {
            mean,
            std_dev,
            variation_coeff: std_dev / mean,
            mean_se: (sample_var / count).sqrt(),
            std_dev_se,
            templates: rates.len() as u64,
            inner_trials: inner,
            rates,
        })
    }

    pub fn c_squared(&self) -> f64 {
        self.variation_coeff * self.variation_coeff
    }

    /// `MR_Pi - sigma / sqrt(delta)`; Chebyshev puts at least `1 - delta`
    /// of the template mass strictly above it.
    pub fn chebyshev_threshold(&self, delta: f64) -> f64 {
        self.mean - self.std_dev / delta.sqrt()
    }

    /// Share of the rated templates whose rate exceeds `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        if self.rates.is_empty() {
            return f64::NAN;
        }
        self.rates.iter().filter(|&&r| r > threshold).count() as f64 / self.rates.len() as f64
    }
}
