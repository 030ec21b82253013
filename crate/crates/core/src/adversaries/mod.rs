//! Built-in adversaries and the name registry used by configs and the CLI.

mod irr;
mod pal;
mod unlink;

use std::sync::Arc;

use crate::error::{BtpError, Result};
use crate::games::{GameSetup, IrrAdversary, UnlinkAdversary};
use crate::metrics::{extremal_mr, extremal_rmr, pt_match_stats, CandidateSearch, EstimationConfig};
use crate::population::FeatureElement;
use crate::rng::SeedSpace;
use crate::schemes::{Factor, LambdaSet};

pub use irr::{BlindArgmax, CosetSampler, Inverter, ViewReader};
pub use pal::{n_delta, PalSampler, PalSamplerConfig};
pub use unlink::{CoinFlip, ComparatorRule, CrossComparator, CustomRule, InvertCompare, Reduction, RuleInput, UnlinkMatch};

pub const IRR_ADVERSARIES: [&str; 6] = ["blind", "inverter", "read-pi", "read-ad", "coset-sampler", "pal-sampler"];
pub const UNLINK_ADVERSARIES: [&str; 5] = ["appendix-b", "cross-comparator", "coin", "invert-compare", "reduction(inner=NAME)"];

/// Which IRR game an adversary is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrMode {
    Al(u32),
    Pal,
}

/// Everything the registry needs beyond the game setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryContext {
    pub search: CandidateSearch,
    pub estimation: EstimationConfig,
    pub pal: PalSamplerConfig,
    /// Templates and probes per template behind the sampler's statistics.
    pub stats_templates: u64,
    pub stats_probes: u64,
    pub coset_samples: u32,
}

impl AdversaryContext {
    pub fn new(seed: u64) -> Self {
        AdversaryContext {
            search: CandidateSearch::new(seed),
            estimation: EstimationConfig { seeds: SeedSpace::new(seed).derive("adversaries"), ..EstimationConfig::new(seed) },
            pal: PalSamplerConfig::default(),
            stats_templates: 2_000,
            stats_probes: 1_000,
            coset_samples: CosetSampler::DEFAULT_SAMPLES,
        }
    }
}

fn blind_witness(setup: &GameSetup, mode: IrrMode, ctx: &AdversaryContext) -> Result<FeatureElement> {
    Ok(match mode {
        IrrMode::Al(tau) => extremal_mr(&setup.population, tau, &ctx.search)?.witness,
        IrrMode::Pal => extremal_rmr(&*setup.scheme, &setup.population, &ctx.search)?.witness,
    })
}

/// Builds a named IRR adversary and checks it against the setup.
pub fn irr_adversary(name: &str, setup: &GameSetup, mode: IrrMode, ctx: &AdversaryContext) -> Result<Arc<dyn IrrAdversary>> {
    let adversary: Arc<dyn IrrAdversary> = match name {
        "blind" => Arc::new(BlindArgmax::new(blind_witness(setup, mode, ctx)?)),
        "inverter" => Arc::new(Inverter::new(blind_witness(setup, mode, ctx)?)),
        "read-pi" => Arc::new(ViewReader::new(Factor::Pi, blind_witness(setup, mode, ctx)?)),
        "read-ad" => Arc::new(ViewReader::new(Factor::Ad, blind_witness(setup, mode, ctx)?)),
        "coset-sampler" => Arc::new(CosetSampler::new(ctx.coset_samples, blind_witness(setup, mode, ctx)?)),
        "pal-sampler" => {
            // fail on the leaked subset before paying for the statistics
            if setup.lambda != LambdaSet::PiAd {
                return Err(BtpError::contract(format!("pal-sampler needs the leaked subset pi+ad, got {}", setup.lambda)));
            }
            let stats = pt_match_stats(&*setup.scheme, &setup.population, ctx.stats_templates, ctx.stats_probes, &ctx.estimation)?;
            Arc::new(PalSampler::new(ctx.pal, &stats)?)
        }
        other => return Err(BtpError::config(format!("unknown IRR adversary {other:?}; expected one of {}", IRR_ADVERSARIES.join(", ")))),
    };
    adversary.check(setup)?;
    Ok(adversary)
}

/// Splits `reduction(inner=NAME)` or `reduction(inner=NAME,tau=K)`.
fn parse_reduction(name: &str) -> Result<Option<(String, Option<u32>)>> {
    let Some(args) = name.strip_prefix("reduction(").and_then(|r| r.strip_suffix(')')) else {
        return Ok(None);
    };
    let mut inner = None;
    let mut tau = None;
    for part in args.split(',').map(str::trim) {
        match part.split_once('=') {
            Some(("inner", v)) => inner = Some(v.trim().to_string()),
            Some(("tau", v)) => tau = Some(v.trim().parse().map_err(|_| BtpError::config(format!("bad reduction threshold {v:?}")))?),
            _ => return Err(BtpError::config(format!("bad reduction argument {part:?}"))),
        }
    }
    let inner = inner.ok_or_else(|| BtpError::config("reduction needs inner=NAME"))?;
    Ok(Some((inner, tau)))
}

/// Builds a named UNLINK adversary. `tau` is the reduction threshold unless
/// the name overrides it.
pub fn unlink_adversary(name: &str, setup: &GameSetup, tau: u32, ctx: &AdversaryContext) -> Result<Arc<dyn UnlinkAdversary>> {
    let adversary: Arc<dyn UnlinkAdversary> = match name {
        "appendix-b" => Arc::new(UnlinkMatch),
        "cross-comparator" => Arc::new(CrossComparator::default()),
        "coin" => Arc::new(CoinFlip),
        "invert-compare" => Arc::new(InvertCompare),
        other => match parse_reduction(other)? {
            Some((inner, t)) => {
                let tau = t.unwrap_or(tau);
                let inner_setup = setup.clone().with_tau(Some(tau));
                Arc::new(Reduction::new(irr_adversary(&inner, &inner_setup, IrrMode::Al(tau), ctx)?, tau))
            }
            None => {
                return Err(BtpError::config(format!(
                    "unknown UNLINK adversary {other:?}; expected one of {}",
                    UNLINK_ADVERSARIES.join(", ")
                )))
            }
        },
    };
    adversary.check(setup)?;
    Ok(adversary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{FuzzyCommitment, LinearCode};
    use crate::{Population, PopulationConfig};

    fn setup(lambda: LambdaSet) -> GameSetup {
        GameSetup::new(
            Arc::new(FuzzyCommitment::new(LinearCode::hamming_7_4())),
            Arc::new(Population::generate(&PopulationConfig::default()).unwrap()),
            lambda,
        )
    }

    #[test]
    fn registry_names_resolve() {
        let ctx = AdversaryContext::new(1);
        let full = setup(LambdaSet::PiAd);
        for name in IRR_ADVERSARIES {
            let a = irr_adversary(name, &full, IrrMode::Pal, &ctx).unwrap();
            assert_eq!(a.name(), name);
        }
        for name in ["appendix-b", "cross-comparator", "coin", "invert-compare", "reduction(inner=blind)"] {
            let a = unlink_adversary(name, &full, 1, &ctx).unwrap();
            assert_eq!(a.name(), name);
        }
        assert!(unlink_adversary("reduction(inner=blind,tau=2)", &full, 1, &ctx).is_ok());
    }

    #[test]
    fn registry_rejects_bad_requests() {
        let ctx = AdversaryContext::new(1);
        let pi = setup(LambdaSet::Pi);
        assert!(matches!(irr_adversary("pal-sampler", &pi, IrrMode::Pal, &ctx), Err(BtpError::Contract(_))));
        assert!(matches!(unlink_adversary("appendix-b", &pi, 0, &ctx), Err(BtpError::Contract(_))));
        assert!(matches!(irr_adversary("oracle", &pi, IrrMode::Pal, &ctx), Err(BtpError::Config(_))));
        assert!(matches!(unlink_adversary("reduction(tau=1)", &pi, 0, &ctx), Err(BtpError::Config(_))));
        assert!(matches!(unlink_adversary("reduction(inner=read-ad)", &pi, 0, &ctx), Err(BtpError::Contract(_))));
    }
}
