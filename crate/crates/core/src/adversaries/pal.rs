use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{BtpError, Result};
use crate::games::{GameSetup, IrrAdversary, IrrState};
use crate::metrics::MatchRateStats;
use crate::population::{FeatureElement, SamplingOracle};
use crate::schemes::{LambdaSet, LambdaView};

/// The constants `delta` and `gamma` of the sampling attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalSamplerConfig {
    pub delta: f64,
    pub gamma: f64,
}

impl Default for PalSamplerConfig {
    fn default() -> Self {
        PalSamplerConfig { delta: 0.16, gamma: 0.5 }
    }
}

/// Smallest `N >= 1` with `(1 - mu)^N < (gamma - delta) / (1 - delta)`.
pub fn n_delta(mu: f64, delta: f64, gamma: f64) -> Result<u64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(BtpError::config(format!("mu must lie in (0, 1], got {mu}")));
    }
    if !(0.0 < delta && delta < gamma && gamma < 1.0) {
        return Err(BtpError::config(format!("need 0 < delta < gamma < 1, got delta = {delta}, gamma = {gamma}")));
    }
    let target = (gamma - delta) / (1.0 - delta);
    let miss = 1.0 - mu;
    if miss < target {
        return Ok(1);
    }
    let below = |n: u64| miss.powf(n as f64) < target;
    // the closed form lands within one step; walk to the exact boundary
    let mut n = ((target.ln() / miss.ln()).ceil() as u64).max(1);
    while !below(n) {
        n += 1;
    }
    while n > 1 && below(n - 1) {
        n -= 1;
    }
    Ok(n)
}

struct SamplerState {
    tries: u64,
}

impl IrrState for SamplerState {
    fn guess(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<FeatureElement> {
        let pt = view.template().ok_or_else(|| BtpError::contract("pal-sampler needs the full template"))?;
        let mut last = None;
        for _ in 0..self.tries {
            let v = oracle.population().random_user(rng);
            let candidate = oracle.sample(v)?;
            if setup.scheme.verify(&pt, &candidate)?.is_match() {
                return Ok(candidate);
            }
            last = Some(candidate);
        }
        Ok(last.expect("n_delta is at least one"))
    }
}

/// Draws fresh population samples until one is accepted by the challenge
/// template, giving up after `N_delta` tries.
#[derive(Debug, Clone, PartialEq)]
pub struct PalSampler {
    pub config: PalSamplerConfig,
    /// `MR_Pi - sigma / sqrt(delta)`.
    pub mu: f64,
    pub n_delta: u64,
    pub c_squared: f64,
}

impl PalSampler {
    /// Derives `mu` and `N_delta` from match-rate statistics.
    pub fn new(config: PalSamplerConfig, stats: &MatchRateStats) -> Result<Self> {
        let PalSamplerConfig { delta, gamma } = config;
        if !(delta > 0.0 && gamma < 1.0) {
            return Err(BtpError::config(format!("need 0 < delta and gamma < 1, got delta = {delta}, gamma = {gamma}")));
        }
        let c_squared = stats.c_squared();
        if c_squared >= delta {
            return Err(BtpError::VariationTooHigh { c_squared, delta });
        }
        if gamma <= delta {
            return Err(BtpError::config(format!("gamma = {gamma} must exceed delta = {delta}")));
        }
        let mu = stats.chebyshev_threshold(delta);
        Ok(PalSampler { config, mu, n_delta: n_delta(mu, delta, gamma)?, c_squared })
    }
}

impl IrrAdversary for PalSampler {
    fn name(&self) -> String {
        "pal-sampler".into()
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        if setup.lambda != LambdaSet::PiAd {
            return Err(BtpError::contract(format!("pal-sampler needs the leaked subset pi+ad, got {}", setup.lambda)));
        }
        Ok(())
    }

    fn phase1(&self, _: &GameSetup, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<Box<dyn IrrState>> {
        Ok(Box::new(SamplerState { tries: self.n_delta }))
    }
}
