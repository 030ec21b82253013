use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{BtpError, Result};
use crate::games::{GameSetup, IrrAdversary, IrrState, UnlinkAdversary, UnlinkState, UnlinkSubmission};
use crate::population::{hamming_distance, FeatureElement, SamplingOracle};
use crate::schemes::{BtpScheme, LambdaSet, LambdaView};

type Triple = (FeatureElement, FeatureElement, FeatureElement);

fn coin(rng: &mut dyn RngCore) -> u8 {
    rng.gen_range(0..2)
}

fn uniform_triple(oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<Triple> {
    let pop = oracle.population();
    let (u, u0, u1) = (pop.random_user(rng), pop.random_user(rng), pop.random_user(rng));
    Ok((oracle.sample(u)?, oracle.sample(u0)?, oracle.sample(u1)?))
}

/// The decision of the matching attack: a template rejecting `x1` must come
/// from `x0`, one rejecting `x0` must come from `x1`.
fn match_rule(
    scheme: &dyn BtpScheme,
    view_prime: &LambdaView,
    x0: &FeatureElement,
    x1: &FeatureElement,
    rng: &mut dyn RngCore,
) -> Result<u8> {
    let pt = view_prime.template().ok_or_else(|| BtpError::contract("the matching rule needs the full template"))?;
    if !scheme.verify(&pt, x1)?.is_match() {
        Ok(0)
    } else if !scheme.verify(&pt, x0)?.is_match() {
        Ok(1)
    } else {
        Ok(coin(rng))
    }
}

fn require_full(name: &str, setup: &GameSetup) -> Result<()> {
    if setup.lambda != LambdaSet::PiAd {
        return Err(BtpError::contract(format!("{name} needs the leaked subset pi+ad, got {}", setup.lambda)));
    }
    Ok(())
}

/// A state holding the triple plus a decision closure.
struct Decider<F> {
    triple: Triple,
    decide: F,
}

impl<F> UnlinkState for Decider<F>
where
    F: FnOnce(&GameSetup, &LambdaView, &LambdaView, Triple, &mut SamplingOracle<'_>, &mut dyn RngCore) -> Result<u8> + Send,
{
    fn triple(&self) -> Triple {
        self.triple
    }

    fn decide(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        view_prime: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<u8> {
        (self.decide)(setup, view, view_prime, self.triple, oracle, rng)
    }
}

fn submit<F>(triple: Triple, decide: F) -> UnlinkSubmission
where
    F: FnOnce(&GameSetup, &LambdaView, &LambdaView, Triple, &mut SamplingOracle<'_>, &mut dyn RngCore) -> Result<u8> + Send + 'static,
{
    UnlinkSubmission { x: triple.0, x0: triple.1, x1: triple.2, state: Box::new(Decider { triple, decide }) }
}

/// Three independent uniform users; decides with the matching rule on the
/// second template only.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnlinkMatch;

impl UnlinkAdversary for UnlinkMatch {
    fn name(&self) -> String {
        "appendix-b".into()
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        require_full("appendix-b", setup)
    }

    fn phase1(&self, _: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission> {
        let triple = uniform_triple(oracle, rng)?;
        Ok(submit(triple, |setup, _, view_prime, (_, x0, x1), _, rng| match_rule(&*setup.scheme, view_prime, &x0, &x1, rng)))
    }
}

/// Submits a uniform triple and guesses at random.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoinFlip;

impl UnlinkAdversary for CoinFlip {
    fn name(&self) -> String {
        "coin".into()
    }

    fn phase1(&self, _: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission> {
        let triple = uniform_triple(oracle, rng)?;
        Ok(submit(triple, |_, _, _, _, _, rng| Ok(coin(rng))))
    }
}

/// Inputs to a cross-comparator decision.
pub struct RuleInput<'a> {
    pub scheme: &'a dyn BtpScheme,
    pub view: &'a LambdaView,
    pub view_prime: &'a LambdaView,
    pub x: FeatureElement,
    pub x0: FeatureElement,
    pub x1: FeatureElement,
}

pub type CustomRule = Arc<dyn Fn(&RuleInput<'_>, &mut dyn RngCore) -> Result<u8> + Send + Sync>;

#[derive(Clone, Default)]
pub enum ComparatorRule {
    AlwaysZero,
    AlwaysOne,
    /// With the full template, the matching rule. With PI alone, `0` iff
    /// the two identifiers match each other. With AD alone no comparison
    /// exists and the guess is uniform.
    #[default]
    PicThreshold,
    Custom {
        name: String,
        rule: CustomRule,
    },
}

impl ComparatorRule {
    pub fn name(&self) -> &str {
        match self {
            ComparatorRule::AlwaysZero => "always-0",
            ComparatorRule::AlwaysOne => "always-1",
            ComparatorRule::PicThreshold => "pic-threshold",
            ComparatorRule::Custom { name, .. } => name,
        }
    }

    fn apply(&self, input: &RuleInput<'_>, rng: &mut dyn RngCore) -> Result<u8> {
        match self {
            ComparatorRule::AlwaysZero => Ok(0),
            ComparatorRule::AlwaysOne => Ok(1),
            ComparatorRule::PicThreshold => match (input.view_prime.template(), input.view.pi, input.view_prime.pi) {
                (Some(_), _, _) => match_rule(input.scheme, input.view_prime, &input.x0, &input.x1, rng),
                (None, Some(pi), Some(pi_prime)) => Ok(if input.scheme.pic(&pi, &pi_prime).is_match() { 0 } else { 1 }),
                _ => Ok(coin(rng)),
            },
            ComparatorRule::Custom { rule, .. } => rule(input, rng),
        }
    }
}

impl fmt::Debug for ComparatorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Links two templates: samples user `u` twice and a different user `v`
/// once, so `x` and `x0` are mated and `x1` is not.
#[derive(Debug, Clone, Default)]
pub struct CrossComparator {
    pub rule: ComparatorRule,
}

impl CrossComparator {
    pub fn new(rule: ComparatorRule) -> Self {
        CrossComparator { rule }
    }
}

impl UnlinkAdversary for CrossComparator {
    fn name(&self) -> String {
        match self.rule {
            ComparatorRule::PicThreshold => "cross-comparator".into(),
            _ => format!("cross-comparator(rule={})", self.rule.name()),
        }
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        if setup.population.users() < 2 {
            return Err(BtpError::config("the cross-comparator needs at least two users"));
        }
        Ok(())
    }

    fn phase1(&self, _: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission> {
        let (u, v) = oracle.population().random_distinct_pair(rng);
        let triple = (oracle.sample(u)?, oracle.sample(u)?, oracle.sample(v)?);
        let rule = self.rule.clone();
        Ok(submit(triple, move |setup, view, view_prime, (x, x0, x1), _, rng| {
            rule.apply(&RuleInput { scheme: &*setup.scheme, view, view_prime, x, x0, x1 }, rng)
        }))
    }
}

/// Turns an AL_tau inverter into an UNLINK adversary: invert the second
/// template and see which submitted sample the answer lands near.
#[derive(Clone)]
pub struct Reduction {
    inner: Arc<dyn IrrAdversary>,
    tau: u32,
}

impl Reduction {
    pub fn new(inner: Arc<dyn IrrAdversary>, tau: u32) -> Self {
        Reduction { inner, tau }
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

struct ReductionState {
    triple: Triple,
    tau: u32,
    inner: Box<dyn IrrState>,
}

impl UnlinkState for ReductionState {
    fn triple(&self) -> Triple {
        self.triple
    }

    fn decide(
        self: Box<Self>,
        setup: &GameSetup,
        _view: &LambdaView,
        view_prime: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<u8> {
        let (_, x0, x1) = self.triple;
        // balls of radius tau around x0 and x1 meet iff d(x0, x1) <= 2 tau
        if hamming_distance(&x0, &x1)? <= 2 * self.tau {
            return Ok(coin(rng));
        }
        let irr_setup = setup.clone().with_tau(Some(self.tau));
        let guess = self.inner.guess(&irr_setup, view_prime, oracle, rng)?;
        if hamming_distance(&x0, &guess)? <= self.tau {
            Ok(0)
        } else if hamming_distance(&x1, &guess)? <= self.tau {
            Ok(1)
        } else {
            Ok(coin(rng))
        }
    }
}

impl UnlinkAdversary for Reduction {
    fn name(&self) -> String {
        format!("reduction(inner={})", self.inner.name())
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        self.inner.check(&setup.clone().with_tau(Some(self.tau)))
    }

    fn phase1(&self, setup: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission> {
        let irr_setup = setup.clone().with_tau(Some(self.tau));
        let inner = self.inner.phase1(&irr_setup, oracle, rng)?;
        let triple = uniform_triple(oracle, rng)?;
        Ok(UnlinkSubmission { x: triple.0, x0: triple.1, x1: triple.2, state: Box::new(ReductionState { triple, tau: self.tau, inner }) })
    }
}

/// Inverts the second template with the scheme's public inversion and
/// picks the closer of `x0` and `x1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InvertCompare;

impl UnlinkAdversary for InvertCompare {
    fn name(&self) -> String {
        "invert-compare".into()
    }

    fn phase1(&self, _: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission> {
        let (u, v) = oracle.population().random_distinct_pair(rng);
        let triple = (oracle.sample(u)?, oracle.sample(u)?, oracle.sample(v)?);
        Ok(submit(triple, |setup, _, view_prime, (_, x0, x1), _, rng| {
            let Some(x) = setup.scheme.invert(view_prime) else { return Ok(coin(rng)) };
            let (d0, d1) = (hamming_distance(&x, &x0)?, hamming_distance(&x, &x1)?);
            Ok(match d0.cmp(&d1) {
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Equal => coin(rng),
            })
        }))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::adversaries::Inverter;
    use crate::rng::TrialRng;
    use crate::schemes::{lambda_project, PlaintextScheme};
    use crate::{Population, PopulationConfig};

    #[test]
    fn reduction_ignores_the_first_template() {
        let pop = Arc::new(Population::generate(&PopulationConfig::default()).unwrap());
        let scheme: Arc<dyn BtpScheme> = Arc::new(PlaintextScheme::new(7, 0).unwrap());
        let setup = GameSetup::new(scheme.clone(), pop.clone(), LambdaSet::Pi);
        let reduction = Reduction::new(Arc::new(Inverter::new(pop.centers()[0])), 0);
        let view_of = |x: &FeatureElement| lambda_project(&scheme.pie(x, &mut TrialRng::seed_from_u64(0)).unwrap(), LambdaSet::Pi);
        for i in 0..200u64 {
            // replays phase 1 and the phase-2 coins of trial i
            let decide = |view: &LambdaView, view_prime: &LambdaView| {
                let mut noise = TrialRng::seed_from_u64(i);
                let mut coins = TrialRng::seed_from_u64(i);
                let mut oracle = SamplingOracle::new(&pop, 100, &mut noise);
                let sub = reduction.phase1(&setup, &mut oracle, &mut coins).unwrap();
                sub.state.decide(&setup, view, view_prime, &mut oracle, &mut coins).unwrap()
            };
            let (x, _, x1) = {
                let mut noise = TrialRng::seed_from_u64(i);
                let mut oracle = SamplingOracle::new(&pop, 100, &mut noise);
                let sub = reduction.phase1(&setup, &mut oracle, &mut TrialRng::seed_from_u64(i)).unwrap();
                (sub.x, sub.x0, sub.x1)
            };
            let view_prime = view_of(&x1);
            let answers = [x, x1, pop.centers()[3]].map(|decoy| decide(&view_of(&decoy), &view_prime));
            assert!(answers.windows(2).all(|w| w[0] == w[1]), "trial {i}: {answers:?}");
        }
    }
}
