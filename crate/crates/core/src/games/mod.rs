//! Challenger side of the irreversibility and unlinkability games.
//!
//! Every trial uses four private streams (challenger coins, challenger
//! oracle noise, adversary coins, adversary oracle noise) addressed by the
//! trial index. In [`Randomness::Shared`] mode all IRR variants read the
//! same streams, so running AL_0, AL_tau and PAL with one adversary instance
//! replays the same challenge and the same guess in each game.

mod run;
mod transcript;

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{AdvantageEstimate, Provenance};
use crate::population::{FeatureElement, Population, SamplingOracle, DEFAULT_QUERY_BUDGET};
use crate::rng::SeedSpace;
use crate::schemes::{BtpScheme, LambdaSet, LambdaView};

pub use run::{est_cross_match_rates, run_al_irr_game, run_pal_irr_game, run_unlink_game, CrossMatchRates};
pub use transcript::{validate_irr_transcript, validate_unlink_transcript, Step, Transcript};

/// Public parameters plus the leaked subset, as sent to the adversary.
#[derive(Debug, Clone)]
pub struct GameSetup {
    pub scheme: Arc<dyn BtpScheme>,
    pub population: Arc<Population>,
    pub lambda: LambdaSet,
    /// The AL threshold; `None` in PAL and UNLINK games.
    pub tau: Option<u32>,
}

impl GameSetup {
    pub fn new(scheme: Arc<dyn BtpScheme>, population: Arc<Population>, lambda: LambdaSet) -> Self {
        GameSetup { scheme, population, lambda, tau: None }
    }

    pub fn with_tau(mut self, tau: Option<u32>) -> Self {
        self.tau = tau;
        self
    }
}

/// First stage of an IRR adversary. Implementations are factories: one
/// instance serves every trial and the per-trial state lives in the
/// returned [`IrrState`].
pub trait IrrAdversary: Send + Sync {
    fn name(&self) -> String;

    /// Rejects setups the adversary cannot play, before any trial runs.
    fn check(&self, _setup: &GameSetup) -> Result<()> {
        Ok(())
    }

    fn phase1(&self, setup: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<Box<dyn IrrState>>;
}

/// Second stage of an IRR adversary.
pub trait IrrState: Send {
    fn guess(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<FeatureElement>;
}

/// The triple an UNLINK adversary submits, and the state it keeps. The state
/// must report the same triple back through [`UnlinkState::triple`].
pub struct UnlinkSubmission {
    pub x: FeatureElement,
    pub x0: FeatureElement,
    pub x1: FeatureElement,
    pub state: Box<dyn UnlinkState>,
}

pub trait UnlinkAdversary: Send + Sync {
    fn name(&self) -> String;

    fn check(&self, _setup: &GameSetup) -> Result<()> {
        Ok(())
    }

    fn phase1(&self, setup: &GameSetup, oracle: &mut SamplingOracle<'_>, rng: &mut dyn RngCore) -> Result<UnlinkSubmission>;
}

pub trait UnlinkState: Send {
    fn triple(&self) -> (FeatureElement, FeatureElement, FeatureElement);

    /// Returns the guess `b'`. Anything other than 0 or 1 is a protocol
    /// violation.
    fn decide(
        self: Box<Self>,
        setup: &GameSetup,
        view: &LambdaView,
        view_prime: &LambdaView,
        oracle: &mut SamplingOracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<u8>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Randomness {
    /// Every IRR game reads the same per-trial streams.
    #[default]
    Shared,
    /// Each game variant gets its own region of seed space.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub trials: u64,
    /// Oracle queries allowed per role per trial.
    pub query_budget: u64,
    pub seeds: SeedSpace,
    pub randomness: Randomness,
    /// Keep per-trial outcomes and transcripts.
    pub record: bool,
    pub confidence: crate::metrics::Confidence,
}

impl GameConfig {
    pub fn new(seed: u64, trials: u64) -> Self {
        GameConfig {
            trials,
            query_budget: DEFAULT_QUERY_BUDGET,
            seeds: SeedSpace::new(seed).derive("games"),
            randomness: Randomness::Shared,
            record: false,
            confidence: Default::default(),
        }
    }

    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.query_budget = budget;
        self
    }

    pub fn with_randomness(mut self, randomness: Randomness) -> Self {
        self.randomness = randomness;
        self
    }
}

/// Wins and trials of the runs where the challenger's bit was `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BitCounts {
    pub trials: u64,
    pub wins: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub game: String,
    pub lambda: LambdaSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
    pub adversary: String,
    pub wins: u64,
    pub trials: u64,
    /// Trials lost because an oracle budget ran out.
    pub aborted: u64,
    pub win_rate: AdvantageEstimate,
    /// `m_{d<=tau}` or `m_Pi` for IRR games.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_provenance: Option<Provenance>,
    /// Signed `win rate - m` for IRR games, `|2 w - 1|` for UNLINK.
    pub advantage: AdvantageEstimate,
    /// Oracle queries over all trials and roles.
    pub queries: u64,
    pub max_trial_queries: u64,
    /// UNLINK only: outcomes split by the challenger's bit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_bit: Option<[BitCounts; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript_hashes: Option<Vec<String>>,
    #[serde(skip)]
    pub transcripts: Option<Vec<Transcript>>,
}

impl GameResult {
    /// Win rate restricted to trials with challenger bit `b`.
    pub fn conditional_win_rate(&self, b: usize) -> Option<f64> {
        let counts = self.by_bit?[b];
        (counts.trials > 0).then(|| counts.wins as f64 / counts.trials as f64)
    }
}
