use rand::RngCore;

use crate::error::{BtpError, Result};
use crate::games::{GameSetup, IrrAdversary, IrrState};
use crate::metrics::{extremal_mr, extremal_rmr, CandidateSearch};
use crate::population::{hamming_distance, FeatureElement, Population, SamplingOracle};
use crate::schemes::{AuxData, BtpScheme, Factor, Identifier, LambdaView};

/// Phase 2 that returns a precomputed answer.
struct Fixed(FeatureElement);

impl IrrState for Fixed {
    fn guess(self: Box<Self>, _: &GameSetup, _: &LambdaView, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<FeatureElement> {
        Ok(self.0)
    }
}

/// Ignores the template and answers with the maximiser of `MR_{d<=tau}`
/// (AL mode) or `rMR_Pi` (PAL mode). Makes no oracle queries.
#[derive(Debug, Clone)]
pub struct BlindArgmax {
    witness: FeatureElement,
}

impl BlindArgmax {
    pub fn new(witness: FeatureElement) -> Self {
        BlindArgmax { witness }
    }

    pub fn al(pop: &Population, tau: u32, search: &CandidateSearch) -> Result<Self> {
        Ok(Self::new(extremal_mr(pop, tau, search)?.witness))
    }

    pub fn pal(scheme: &dyn BtpScheme, pop: &Population, search: &CandidateSearch) -> Result<Self> {
        Ok(Self::new(extremal_rmr(scheme, pop, search)?.witness))
    }

    pub fn witness(&self) -> FeatureElement {
        self.witness
    }
}

impl IrrAdversary for BlindArgmax {
    fn name(&self) -> String {
        "blind".into()
    }

    fn phase1(&self, _: &GameSetup, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<Box<dyn IrrState>> {
        Ok(Box::new(Fixed(self.witness)))
    }
}

struct InvertState {
    fallback: FeatureElement,
}

impl IrrState for InvertState {
    fn guess(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        _: &mut SamplingOracle<'_>,
        _: &mut dyn RngCore,
    ) -> Result<FeatureElement> {
        Ok(setup.scheme.invert(view).unwrap_or(self.fallback))
    }
}

/// Uses the scheme's own inversion where the leaked factors allow it and
/// otherwise falls back to a blind answer.
#[derive(Debug, Clone)]
pub struct Inverter {
    fallback: FeatureElement,
}

impl Inverter {
    pub fn new(fallback: FeatureElement) -> Self {
        Inverter { fallback }
    }
}

impl IrrAdversary for Inverter {
    fn name(&self) -> String {
        "inverter".into()
    }

    fn phase1(&self, _: &GameSetup, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<Box<dyn IrrState>> {
        Ok(Box::new(InvertState { fallback: self.fallback }))
    }
}

struct ReadState {
    factor: Factor,
    fallback: FeatureElement,
}

impl IrrState for ReadState {
    fn guess(self: Box<Self>, _: &GameSetup, view: &LambdaView, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<FeatureElement> {
        let read = match self.factor {
            Factor::Pi => match view.pi {
                Some(Identifier::Bits(x)) => Some(x),
                _ => None,
            },
            Factor::Ad => match view.alpha {
                Some(AuxData::Bits(x)) => Some(x),
                _ => None,
            },
        };
        Ok(read.unwrap_or(self.fallback))
    }
}

/// Returns one leaked factor verbatim when it is a bit vector.
#[derive(Debug, Clone)]
pub struct ViewReader {
    factor: Factor,
    fallback: FeatureElement,
}

impl ViewReader {
    pub fn new(factor: Factor, fallback: FeatureElement) -> Self {
        ViewReader { factor, fallback }
    }
}

impl IrrAdversary for ViewReader {
    fn name(&self) -> String {
        match self.factor {
            Factor::Pi => "read-pi".into(),
            Factor::Ad => "read-ad".into(),
        }
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        if !setup.lambda.contains(self.factor) {
            return Err(BtpError::contract(format!("{} needs the factor in the leaked subset, got {}", self.name(), setup.lambda)));
        }
        Ok(())
    }

    fn phase1(&self, _: &GameSetup, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<Box<dyn IrrState>> {
        Ok(Box::new(ReadState { factor: self.factor, fallback: self.fallback }))
    }
}

struct CosetState {
    samples: u32,
    fallback: FeatureElement,
}

impl IrrState for CosetState {
    fn guess(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<FeatureElement> {
        let (Some(code), Some(AuxData::Bits(alpha))) = (setup.scheme.linear_code(), view.alpha) else {
            return Ok(self.fallback);
        };
        let template = view.template();
        let pop = oracle.population();
        let (n, p) = (pop.n() as i32, pop.flip_prob());
        let mut samples = Vec::with_capacity(self.samples as usize);
        for _ in 0..self.samples {
            let v = oracle.population().random_user(rng);
            samples.push(oracle.sample(v)?);
        }
        // x lies in the coset alpha + C. Score each member by a density
        // estimate of X(U) built from the samples, treating each as a center.
        let mut best: Option<(f64, FeatureElement)> = None;
        for w in code.codewords() {
            let candidate = alpha.xor(w)?;
            if let Some(pt) = &template {
                if !setup.scheme.verify(pt, &candidate)?.is_match() {
                    continue;
                }
            }
            let mut score = 0.0;
            for s in &samples {
                let d = hamming_distance(s, &candidate)? as i32;
                score += p.powi(d) * (1.0 - p).powi(n - d);
            }
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, candidate));
            }
        }
        Ok(best.map_or(self.fallback, |(_, c)| c))
    }
}

/// Attack on code-offset helper data: the sample sits in the coset
/// `alpha + C`, so the answer is the coset member the population puts the
/// most mass on, judged from oracle samples.
#[derive(Debug, Clone)]
pub struct CosetSampler {
    samples: u32,
    fallback: FeatureElement,
}

impl CosetSampler {
    pub const DEFAULT_SAMPLES: u32 = 64;

    pub fn new(samples: u32, fallback: FeatureElement) -> Self {
        CosetSampler { samples, fallback }
    }
}

impl IrrAdversary for CosetSampler {
    fn name(&self) -> String {
        "coset-sampler".into()
    }

    fn check(&self, setup: &GameSetup) -> Result<()> {
        if !setup.lambda.contains(Factor::Ad) {
            return Err(BtpError::contract("coset-sampler needs AD in the leaked subset"));
        }
        if setup.scheme.linear_code().is_none() {
            return Err(BtpError::contract(format!("coset-sampler needs a code-offset scheme, not {}", setup.scheme.name())));
        }
        Ok(())
    }

    fn phase1(&self, _: &GameSetup, _: &mut SamplingOracle<'_>, _: &mut dyn RngCore) -> Result<Box<dyn IrrState>> {
        Ok(Box::new(CosetState { samples: self.samples, fallback: self.fallback }))
    }
}
