use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transcript::{Step, Transcript};
use super::{BitCounts, GameConfig, GameResult, GameSetup, IrrAdversary, Randomness, UnlinkAdversary};
use crate::error::{BtpError, Result};
use crate::metrics::{extremal_mr, extremal_rmr, AdvantageEstimate, CandidateSearch, MValue};
use crate::population::{hamming_distance, SamplingOracle};
use crate::rng::{Role, SeedSpace};
use crate::schemes::lambda_project;

struct TrialRecord {
    win: bool,
    aborted: bool,
    queries: u64,
    b: Option<u8>,
    transcript: Option<Transcript>,
}

#[derive(Clone, Copy)]
enum IrrRule {
    Distance(u32),
    Pal,
}

fn irr_seeds(cfg: &GameConfig, label: &str) -> SeedSpace {
    match cfg.randomness {
        Randomness::Shared => cfg.seeds.derive("irr"),
        Randomness::Independent => cfg.seeds.derive(label),
    }
}

fn irr_trial(
    setup: &GameSetup,
    adversary: &dyn IrrAdversary,
    rule: IrrRule,
    cfg: &GameConfig,
    seeds: SeedSpace,
    i: u64,
) -> Result<TrialRecord> {
    let pop = &*setup.population;
    let scheme = &*setup.scheme;
    let mut ch = seeds.rng(i, Role::Challenger);
    let mut ch_noise = seeds.rng(i, Role::ChallengerOracle);
    let mut adv = seeds.rng(i, Role::Adversary);
    let mut adv_noise = seeds.rng(i, Role::AdversaryOracle);
    let mut ch_oracle = SamplingOracle::new(pop, cfg.query_budget, &mut ch_noise);
    let mut adv_oracle = SamplingOracle::new(pop, cfg.query_budget, &mut adv_noise);

    let mut transcript = cfg.record.then(Transcript::default);
    let mut log = |step: Step| {
        if let Some(t) = transcript.as_mut() {
            t.push(step);
        }
    };
    log(Step::Parameters { lambda: setup.lambda, tau: setup.tau, pal: matches!(rule, IrrRule::Pal) });
    let abort = |log: &mut dyn FnMut(Step), queries: u64| {
        log(Step::Aborted);
        log(Step::Verdict { win: false });
        queries
    };

    let state = match adversary.phase1(setup, &mut adv_oracle, &mut adv) {
        Ok(s) => s,
        Err(BtpError::BudgetExhausted { .. }) => {
            let q = abort(&mut log, adv_oracle.queries());
            return Ok(TrialRecord { win: false, aborted: true, queries: q, b: None, transcript });
        }
        Err(e) => return Err(e),
    };
    log(Step::State { queries: adv_oracle.queries() });

    let user = pop.random_user(&mut ch);
    let sample = match ch_oracle.sample(user) {
        Ok(x) => x,
        Err(BtpError::BudgetExhausted { .. }) => {
            let q = abort(&mut log, adv_oracle.queries() + ch_oracle.queries());
            return Ok(TrialRecord { win: false, aborted: true, queries: q, b: None, transcript });
        }
        Err(e) => return Err(e),
    };
    let pt = scheme.pie(&sample, &mut ch)?;
    let view = lambda_project(&pt, setup.lambda);
    log(Step::Challenge { user, sample, view });

    let guess = match state.guess(setup, &view, &mut adv_oracle, &mut adv) {
        Ok(g) => g,
        Err(BtpError::BudgetExhausted { .. }) => {
            let q = abort(&mut log, adv_oracle.queries() + ch_oracle.queries());
            return Ok(TrialRecord { win: false, aborted: true, queries: q, b: None, transcript });
        }
        Err(e) => return Err(e),
    };
    log(Step::Guess { guess, queries: adv_oracle.queries() });
    let win = match rule {
        IrrRule::Distance(tau) => hamming_distance(&sample, &guess)? <= tau,
        IrrRule::Pal => scheme.verify(&pt, &guess)?.is_match(),
    };
    log(Step::Verdict { win });
    Ok(TrialRecord { win, aborted: false, queries: adv_oracle.queries() + ch_oracle.queries(), b: None, transcript })
}

fn collect(
    game: &str,
    setup: &GameSetup,
    adversary: String,
    cfg: &GameConfig,
    records: Vec<TrialRecord>,
    baseline: Option<MValue>,
) -> GameResult {
    let trials = records.len() as u64;
    let wins = records.iter().filter(|r| r.win).count() as u64;
    let win_rate = AdvantageEstimate::from_counts(wins, trials, cfg.confidence).with_queries(records.iter().map(|r| r.queries).sum());
    let advantage = match baseline {
        Some(m) => win_rate.shifted(m.value),
        None => win_rate.unlink_advantage(),
    };
    let by_bit = records.iter().any(|r| r.b.is_some()).then(|| {
        let mut counts = [BitCounts::default(); 2];
        for r in &records {
            if let Some(b) = r.b {
                counts[b as usize].trials += 1;
                counts[b as usize].wins += u64::from(r.win);
            }
        }
        counts
    });
    let transcripts: Option<Vec<Transcript>> = cfg.record.then(|| records.iter().filter_map(|r| r.transcript.clone()).collect());
    GameResult {
        game: game.to_string(),
        lambda: setup.lambda,
        tau: setup.tau,
        adversary,
        wins,
        trials,
        aborted: records.iter().filter(|r| r.aborted).count() as u64,
        win_rate,
        baseline: baseline.map(|m| m.value),
        baseline_provenance: baseline.map(|m| m.provenance),
        advantage,
        queries: win_rate.queries_used,
        max_trial_queries: records.iter().map(|r| r.queries).max().unwrap_or(0),
        by_bit,
        outcomes: cfg.record.then(|| records.iter().map(|r| r.win).collect()),
        transcript_hashes: transcripts.as_ref().map(|ts| ts.iter().map(Transcript::digest).collect()),
        transcripts,
    }
}

fn search(cfg: &GameConfig) -> CandidateSearch {
    CandidateSearch::new(cfg.seeds.master())
}

/// The `Lambda`-AL_tau irreversibility game: the adversary wins when its
/// guess lands within `tau` of the challenger's sample.
pub fn run_al_irr_game(setup: &GameSetup, tau: u32, adversary: &dyn IrrAdversary, cfg: &GameConfig) -> Result<GameResult> {
    let setup = setup.clone().with_tau(Some(tau));
    adversary.check(&setup)?;
    let m = extremal_mr(&setup.population, tau, &search(cfg))?;
    let seeds = irr_seeds(cfg, &format!("al-irr/{}/{tau}", setup.lambda));
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|i| irr_trial(&setup, adversary, IrrRule::Distance(tau), cfg, seeds, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(collect("al-irr", &setup, adversary.name(), cfg, records, Some(m)))
}

/// The `Lambda`-PAL irreversibility game: the adversary wins when the full
/// template, which the challenger keeps, accepts its guess.
pub fn run_pal_irr_game(setup: &GameSetup, adversary: &dyn IrrAdversary, cfg: &GameConfig) -> Result<GameResult> {
    let setup = setup.clone().with_tau(None);
    adversary.check(&setup)?;
    let m = extremal_rmr(&*setup.scheme, &setup.population, &search(cfg))?;
    let seeds = irr_seeds(cfg, &format!("pal-irr/{}", setup.lambda));
    let records =
        (0..cfg.trials).into_par_iter().map(|i| irr_trial(&setup, adversary, IrrRule::Pal, cfg, seeds, i)).collect::<Result<Vec<_>>>()?;
    Ok(collect("pal-irr", &setup, adversary.name(), cfg, records, Some(m)))
}

fn unlink_trial(
    setup: &GameSetup,
    adversary: &dyn UnlinkAdversary,
    cfg: &GameConfig,
    seeds: SeedSpace,
    force_b: Option<u8>,
    i: u64,
) -> Result<TrialRecord> {
    let scheme = &*setup.scheme;
    let mut ch = seeds.rng(i, Role::Challenger);
    let mut adv = seeds.rng(i, Role::Adversary);
    let mut adv_noise = seeds.rng(i, Role::AdversaryOracle);
    let mut oracle = SamplingOracle::new(&setup.population, cfg.query_budget, &mut adv_noise);
    let mut transcript = cfg.record.then(Transcript::default);
    let mut log = |step: Step| {
        if let Some(t) = transcript.as_mut() {
            t.push(step);
        }
    };
    log(Step::Parameters { lambda: setup.lambda, tau: None, pal: false });

    let submission = match adversary.phase1(setup, &mut oracle, &mut adv) {
        Ok(s) => s,
        Err(BtpError::BudgetExhausted { .. }) => {
            log(Step::Aborted);
            log(Step::Verdict { win: false });
            return Ok(TrialRecord { win: false, aborted: true, queries: oracle.queries(), b: None, transcript });
        }
        Err(e) => return Err(e),
    };
    if submission.state.triple() != (submission.x, submission.x0, submission.x1) {
        return Err(BtpError::Protocol("adversary state does not contain the submitted triple".into()));
    }
    log(Step::Submission { x: submission.x, x0: submission.x0, x1: submission.x1, queries: oracle.queries() });

    let b: u8 = match force_b {
        Some(b) => b,
        None => ch.gen_range(0..2),
    };
    let pt = scheme.pie(&submission.x, &mut ch)?;
    let pt_prime = scheme.pie(if b == 0 { &submission.x0 } else { &submission.x1 }, &mut ch)?;
    let view = lambda_project(&pt, setup.lambda);
    let view_prime = lambda_project(&pt_prime, setup.lambda);
    log(Step::Pair { b, view, view_prime });

    let guess = match submission.state.decide(setup, &view, &view_prime, &mut oracle, &mut adv) {
        Ok(g) => g,
        Err(BtpError::BudgetExhausted { .. }) => {
            log(Step::Aborted);
            log(Step::Verdict { win: false });
            return Ok(TrialRecord { win: false, aborted: true, queries: oracle.queries(), b: Some(b), transcript });
        }
        Err(e) => return Err(e),
    };
    if guess > 1 {
        return Err(BtpError::Protocol(format!("adversary answered {guess}, expected a bit")));
    }
    log(Step::Bit { guess, queries: oracle.queries() });
    let win = guess == b;
    log(Step::Verdict { win });
    Ok(TrialRecord { win, aborted: false, queries: oracle.queries(), b: Some(b), transcript })
}

fn unlink_with(
    setup: &GameSetup,
    adversary: &dyn UnlinkAdversary,
    cfg: &GameConfig,
    seeds: SeedSpace,
    force_b: Option<u8>,
) -> Result<GameResult> {
    let setup = setup.clone().with_tau(None);
    adversary.check(&setup)?;
    let records =
        (0..cfg.trials).into_par_iter().map(|i| unlink_trial(&setup, adversary, cfg, seeds, force_b, i)).collect::<Result<Vec<_>>>()?;
    Ok(collect("unlink", &setup, adversary.name(), cfg, records, None))
}

/// The `Lambda`-UNLINK game. The advantage is `|2 w - 1|`.
pub fn run_unlink_game(setup: &GameSetup, adversary: &dyn UnlinkAdversary, cfg: &GameConfig) -> Result<GameResult> {
    unlink_with(setup, adversary, cfg, cfg.seeds.derive("unlink"), None)
}

/// Cross-comparator error rates and the advantage they imply, next to an
/// independently measured UNLINK advantage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMatchRates {
    pub comparator: String,
    /// `Pr[b' = 0 | b = 1]`.
    pub fcmr: AdvantageEstimate,
    /// `Pr[b' = 1 | b = 0]`.
    pub fncmr: AdvantageEstimate,
    /// `|1 - (FCMR + FNCMR)|`.
    pub identity_advantage: f64,
    pub identity_std_error: f64,
    pub unlink: GameResult,
}

impl CrossMatchRates {
    /// Whether both routes to the advantage agree within `z` combined
    /// standard errors.
    pub fn agrees(&self, z: f64) -> bool {
        let se = (self.identity_std_error.powi(2) + self.unlink.advantage.std_error.powi(2)).sqrt();
        (self.identity_advantage - self.unlink.advantage.point).abs() <= z * se
    }
}

pub fn est_cross_match_rates(setup: &GameSetup, comparator: &dyn UnlinkAdversary, cfg: &GameConfig) -> Result<CrossMatchRates> {
    let non_mated = unlink_with(setup, comparator, cfg, cfg.seeds.derive("fcmr"), Some(1))?;
    let mated = unlink_with(setup, comparator, cfg, cfg.seeds.derive("fncmr"), Some(0))?;
    let fail = |r: &GameResult| AdvantageEstimate::from_counts(r.trials - r.wins, r.trials, cfg.confidence).with_queries(r.queries);
    let (fcmr, fncmr) = (fail(&non_mated), fail(&mated));
    let unlink = run_unlink_game(setup, comparator, cfg)?;
    Ok(CrossMatchRates {
        comparator: comparator.name(),
        identity_advantage: (1.0 - (fcmr.point + fncmr.point)).abs(),
        identity_std_error: (fcmr.std_error.powi(2) + fncmr.std_error.powi(2)).sqrt(),
        fcmr,
        fncmr,
        unlink,
    })
}
