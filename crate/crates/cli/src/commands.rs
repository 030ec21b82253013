use std::sync::Arc;

use btpgame::adversaries::{irr_adversary, unlink_adversary, AdversaryContext, IrrMode};
use btpgame::games::{est_cross_match_rates, run_al_irr_game, run_pal_irr_game, run_unlink_game, GameConfig, GameSetup};
use btpgame::metrics::{
    diversity_entropy, est_baseline_rates, est_fmr_bp, est_fmr_div, est_fmr_tp, est_mr_of_feature, est_scheme_fnmr, exact_baseline_rates,
    extremal_mr, extremal_rmr, mr_of_feature, overlap_rates, pt_match_stats, rmr_of_feature, AdvantageEstimate, CandidateSearch,
    EstimationConfig, ExactModel, MatchRateStats, Provenance, EXACT_MAX_N,
};
use btpgame::rng::SeedSpace;
use btpgame::schemes::{build_scheme, BtpScheme, Factor};
use btpgame::verify::{verify, Theorem, VerifyConfig};
use btpgame::{BtpError, Population};
use clap::ValueEnum;

use crate::config::ExperimentConfig;
use crate::report::{CommandEcho, ExperimentReport, ExtremalBlock, MetricEntry};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameKind {
    AlIrr,
    PalIrr,
    Unlink,
    CrossMatch,
}

impl GameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::AlIrr => "al-irr",
            GameKind::PalIrr => "pal-irr",
            GameKind::Unlink => "unlink",
            GameKind::CrossMatch => "cross-match",
        }
    }
}

/// A finished command: the report, and whether any verdict failed.
pub struct Outcome {
    pub report: ExperimentReport,
    pub failed: bool,
}

struct Context {
    population: Arc<Population>,
    scheme: Arc<dyn BtpScheme>,
}

fn build(cfg: &ExperimentConfig) -> Result<Context, CliError> {
    cfg.validate()?;
    let population = Arc::new(Population::generate(&cfg.population)?);
    let scheme = build_scheme(&cfg.scheme, population.n())?;
    Ok(Context { population, scheme })
}

fn estimation(cfg: &ExperimentConfig) -> EstimationConfig {
    EstimationConfig::new(cfg.seed).with_confidence(cfg.confidence)
}

fn adversary_context(cfg: &ExperimentConfig) -> AdversaryContext {
    AdversaryContext {
        estimation: EstimationConfig { seeds: SeedSpace::new(cfg.seed).derive("adversaries"), confidence: cfg.confidence },
        pal: cfg.pal,
        stats_templates: cfg.stats_templates,
        stats_probes: cfg.stats_probes,
        ..AdversaryContext::new(cfg.seed)
    }
}

/// `MR_Pi` as a rate entry. Its interval is the normal one around the mean
/// of the per-template rates.
fn mr_pi_entry(stats: &MatchRateStats, cfg: &ExperimentConfig, exact: Option<f64>) -> MetricEntry {
    let half = cfg.confidence.z() * stats.mean_se;
    MetricEntry {
        metric: "mr_pi".into(),
        estimate: stats.mean,
        ci: [(stats.mean - half).max(0.0), (stats.mean + half).min(1.0)],
        std_error: stats.mean_se,
        trials: stats.templates,
        exact,
    }
}

pub fn cmd_metrics(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let Context { population: pop, scheme } = build(cfg)?;
    let est = estimation(cfg);
    let (tau, trials) = (cfg.tau, cfg.trials);
    let mut report = ExperimentReport::new(CommandEcho { name: "metrics".into(), game: None, adversary: None, theorem: None }, cfg.clone());

    let exact = if pop.n() <= EXACT_MAX_N { Some(ExactModel::new(&*scheme, &pop)?) } else { None };
    if exact.is_none() {
        report.notes.push(format!("n = {} exceeds the enumeration limit; exact columns are omitted", pop.n()));
    }
    let exact_baseline = if exact.is_some() { Some(exact_baseline_rates(&pop, tau)?) } else { None };
    let ex = |f: &dyn Fn(&ExactModel) -> f64| exact.as_ref().map(f);

    let (fnmr, fmr) = est_baseline_rates(&pop, tau, trials, &est)?;
    report.metrics.push(MetricEntry::new("fnmr_baseline", fnmr, exact_baseline.map(|b| b.0)));
    report.metrics.push(MetricEntry::new("fmr_baseline", fmr, exact_baseline.map(|b| b.1)));
    report.metrics.push(MetricEntry::new("fnmr_scheme", est_scheme_fnmr(&*scheme, &pop, trials, &est)?, ex(&|m| m.fnmr())));
    report.metrics.push(MetricEntry::new("fmr_bp", est_fmr_bp(&*scheme, &pop, trials, &est)?, ex(&|m| m.fmr_bp())));
    report.metrics.push(MetricEntry::new("fmr_tp_ad", est_fmr_tp(&*scheme, &pop, Factor::Ad, trials, &est)?, ex(&|m| m.fmr_tp_ad())));
    report.metrics.push(MetricEntry::new("fmr_tp_pi", est_fmr_tp(&*scheme, &pop, Factor::Pi, trials, &est)?, ex(&|m| m.fmr_tp_pi())));
    let fmr_div = est_fmr_div(&*scheme, &pop, trials, &est)?;
    report.metrics.push(MetricEntry::new("fmr_div", fmr_div, ex(&|m| m.fmr_div())));

    let match_rate_exact = match exact.as_ref().map(ExactModel::match_rate_stats) {
        Some(Ok(stats)) => Some(stats),
        Some(Err(BtpError::UndefinedVariation)) | None => None,
        Some(Err(e)) => return Err(e.into()),
    };
    let mr_exact = exact.as_ref().map(|_| match_rate_exact.as_ref().map_or(0.0, |s| s.mean));
    let match_rate = match pt_match_stats(&*scheme, &pop, cfg.stats_templates, cfg.stats_probes, &est) {
        Ok(stats) => {
            report.metrics.push(mr_pi_entry(&stats, cfg, mr_exact));
            Some(stats)
        }
        Err(BtpError::UndefinedVariation) => {
            // no probe was accepted by any template
            let probes = cfg.stats_templates * cfg.stats_probes;
            let zero = AdvantageEstimate::from_counts(0, probes, cfg.confidence);
            report.metrics.push(MetricEntry { trials: cfg.stats_templates, ..MetricEntry::new("mr_pi", zero, mr_exact) });
            report.notes.push("no template accepted any probe; the variation coefficient is undefined".into());
            None
        }
        Err(e) => return Err(e.into()),
    };

    let search = CandidateSearch { estimation: est, ..CandidateSearch::new(cfg.seed) };
    let m_tau = extremal_mr(&pop, tau, &search)?;
    let m_pi = extremal_rmr(&*scheme, &pop, &search)?;
    let exact_if = |provenance: Provenance, value: f64| (provenance == Provenance::Exact).then_some(value);
    let m_pi_mc = rmr_of_feature(&*scheme, &pop, &m_pi.witness, trials, &est)?;
    report.metrics.push(MetricEntry::new("m_pi", m_pi_mc, exact_if(m_pi.provenance, m_pi.value)));
    let m_tau_mc = est_mr_of_feature(&pop, &m_tau.witness, tau, trials, &est)?;
    let m_tau_exact = match mr_of_feature(&pop, &m_tau.witness, tau) {
        Ok(v) if m_tau.provenance == Provenance::Exact => Some(v),
        _ => None,
    };
    report.metrics.push(MetricEntry::new("m_tau", m_tau_mc, m_tau_exact));
    if [m_tau, m_pi].iter().any(|v| v.provenance == Provenance::LowerBound) {
        report.notes.push("m-values come from a candidate search and are lower bounds".into());
    }

    let (p_tau, q_tau) = if pop.n() <= EXACT_MAX_N {
        let (p, q) = overlap_rates(&pop, tau)?;
        (Some(p), Some(q))
    } else {
        (None, None)
    };
    report.extremal = Some(ExtremalBlock {
        tau,
        m_tau,
        m_pi,
        p_tau,
        q_tau,
        match_rate,
        match_rate_exact,
        diversity_entropy: diversity_entropy(fmr_div.point),
    });
    Ok(Outcome { report, failed: false })
}

pub fn default_adversary(cfg: &ExperimentConfig, game: GameKind) -> String {
    match game {
        GameKind::AlIrr | GameKind::PalIrr => cfg.adversaries.irr.clone(),
        GameKind::Unlink => cfg.adversaries.unlink.clone(),
        GameKind::CrossMatch => "cross-comparator".into(),
    }
}

pub fn cmd_game(cfg: &ExperimentConfig, game: GameKind, adversary: &str) -> Result<Outcome, CliError> {
    let Context { population, scheme } = build(cfg)?;
    let mut report = ExperimentReport::new(
        CommandEcho { name: "game".into(), game: Some(game.as_str().into()), adversary: Some(adversary.into()), theorem: None },
        cfg.clone(),
    );
    let game_cfg = GameConfig { query_budget: cfg.query_budget, confidence: cfg.confidence, ..GameConfig::new(cfg.seed, cfg.trials) };
    let ctx = adversary_context(cfg);
    let setup = GameSetup::new(scheme, population, cfg.lambda);
    match game {
        GameKind::AlIrr => {
            let setup = setup.with_tau(Some(cfg.tau));
            let adv = irr_adversary(adversary, &setup, IrrMode::Al(cfg.tau), &ctx)?;
            report.games.push(run_al_irr_game(&setup, cfg.tau, &*adv, &game_cfg)?);
        }
        GameKind::PalIrr => {
            let adv = irr_adversary(adversary, &setup, IrrMode::Pal, &ctx)?;
            report.games.push(run_pal_irr_game(&setup, &*adv, &game_cfg)?);
        }
        GameKind::Unlink => {
            let adv = unlink_adversary(adversary, &setup, cfg.tau, &ctx)?;
            report.games.push(run_unlink_game(&setup, &*adv, &game_cfg)?);
        }
        GameKind::CrossMatch => {
            let adv = unlink_adversary(adversary, &setup, cfg.tau, &ctx)?;
            report.cross_match = Some(est_cross_match_rates(&setup, &*adv, &game_cfg)?);
        }
    }
    Ok(Outcome { report, failed: false })
}

pub fn cmd_verify(cfg: &ExperimentConfig, theorem: Theorem) -> Result<Outcome, CliError> {
    let Context { population, scheme } = build(cfg)?;
    let mut report =
        ExperimentReport::new(CommandEcho { name: "verify".into(), game: None, adversary: None, theorem: Some(theorem) }, cfg.clone());
    let vc = VerifyConfig {
        query_budget: cfg.query_budget,
        confidence: cfg.confidence,
        pal: cfg.pal,
        stats_templates: cfg.stats_templates,
        stats_probes: cfg.stats_probes,
        pi_adversary: cfg.adversaries.pi.clone(),
        ad_adversary: cfg.adversaries.ad.clone(),
        ..VerifyConfig::new(cfg.seed, cfg.trials)
    };
    report.theorems = verify(theorem, scheme, population, cfg.tau, &vc)?;
    let failed = report.theorems.iter().any(|v| v.is_failure());
    for v in &report.theorems {
        for note in &v.notes {
            report.notes.push(format!("{}: {note}", v.id));
        }
    }
    Ok(Outcome { report, failed })
}
