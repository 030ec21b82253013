//! Monte Carlo estimators.
//!
//! Trial `i` of every estimator draws from the stream addressed by its own
//! label and `i`, so counts are identical for any number of worker threads.
//! Estimators whose definitions coincide for the plaintext scheme share a
//! label and a draw order, which makes those coincidences exact.

use rand::RngCore;
use rayon::prelude::*;

use super::{AdvantageEstimate, Confidence, MatchRateStats};
use crate::error::Result;
use crate::population::{hamming_distance, FeatureElement, Population};
use crate::rng::{Role, SeedSpace, TrialRng};
use crate::schemes::{check_dimension, BtpScheme, Factor, ProtectedTemplate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub seeds: SeedSpace,
    pub confidence: Confidence,
}

impl EstimationConfig {
    pub fn new(seed: u64) -> Self {
        EstimationConfig { seeds: SeedSpace::new(seed).derive("metrics"), confidence: Confidence::default() }
    }

    pub fn with_confidence(mut self, confidence: Confidence) -> Self {
        self.confidence = confidence;
        self
    }
}

/// Number of trials among `0..trials` for which `trial` returns true.
pub(crate) fn count_trials<F>(trials: u64, seeds: SeedSpace, trial: F) -> Result<u64>
where
    F: Fn(&mut TrialRng) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.rng(i, Role::Challenger);
            trial(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn estimate(successes: u64, trials: u64, samples_per_trial: u64, cfg: &EstimationConfig) -> AdvantageEstimate {
    AdvantageEstimate::from_counts(successes, trials, cfg.confidence).with_queries(samples_per_trial * trials)
}

fn within(a: &FeatureElement, b: &FeatureElement, tau: u32) -> Result<bool> {
    Ok(hamming_distance(a, b)? <= tau)
}

/// `(FNMR_{d<=tau}, FMR_{d<=tau})`.
pub fn est_baseline_rates(
    pop: &Population,
    tau: u32,
    trials: u64,
    cfg: &EstimationConfig,
) -> Result<(AdvantageEstimate, AdvantageEstimate)> {
    let non_match = count_trials(trials, cfg.seeds.derive("mated"), |rng| {
        let u = pop.random_user(rng);
        let enrolled = pop.draw(u, rng)?;
        let probe = pop.draw(u, rng)?;
        Ok(!within(&enrolled, &probe, tau)?)
    })?;
    let false_match = count_trials(trials, cfg.seeds.derive("non-mated"), |rng| {
        let (u, v) = pop.random_distinct_pair(rng);
        let probe = pop.draw(u, rng)?;
        let reference = pop.draw(v, rng)?;
        within(&reference, &probe, tau)
    })?;
    Ok((estimate(non_match, trials, 2, cfg), estimate(false_match, trials, 2, cfg)))
}

/// `FNMR_Pi`: a fresh sample of `u` rejected by a template of `u`.
pub fn est_scheme_fnmr(scheme: &dyn BtpScheme, pop: &Population, trials: u64, cfg: &EstimationConfig) -> Result<AdvantageEstimate> {
    let non_match = count_trials(trials, cfg.seeds.derive("mated"), |rng| {
        let u = pop.random_user(rng);
        let enrolled = pop.draw(u, rng)?;
        let pt = scheme.pie(&enrolled, rng)?;
        let probe = pop.draw(u, rng)?;
        Ok(!scheme.verify(&pt, &probe)?.is_match())
    })?;
    Ok(estimate(non_match, trials, 2, cfg))
}

/// `FMR^BP_Pi`: impostor `X_u` with the genuine template of `v`.
pub fn est_fmr_bp(scheme: &dyn BtpScheme, pop: &Population, trials: u64, cfg: &EstimationConfig) -> Result<AdvantageEstimate> {
    let matches = count_trials(trials, cfg.seeds.derive("non-mated"), |rng| {
        let (u, v) = pop.random_distinct_pair(rng);
        let probe = pop.draw(u, rng)?;
        let reference = pop.draw(v, rng)?;
        let pt = scheme.pie(&reference, rng)?;
        Ok(scheme.verify(&pt, &probe)?.is_match())
    })?;
    Ok(estimate(matches, trials, 2, cfg))
}

/// `FMR^TP_{Pi,AD}` (`factor = Ad`: the impostor brings its own helper
/// data) or `FMR^TP_{Pi,PI}` (`factor = Pi`: its own identifier).
///
/// Shares the impostor stream with [`est_fmr_bp`], so both estimates use the
/// same `(u, v, x, PIE(X_v))` draws.
pub fn est_fmr_tp(
    scheme: &dyn BtpScheme,
    pop: &Population,
    factor: Factor,
    trials: u64,
    cfg: &EstimationConfig,
) -> Result<AdvantageEstimate> {
    let matches = count_trials(trials, cfg.seeds.derive("non-mated"), |rng| {
        let (u, v) = pop.random_distinct_pair(rng);
        let probe = pop.draw(u, rng)?;
        let reference = pop.draw(v, rng)?;
        let theirs = scheme.pie(&reference, rng)?;
        let own_sample = pop.draw(u, rng)?;
        let own = scheme.pie(&own_sample, rng)?;
        let decision = match factor {
            Factor::Ad => scheme.pic(&theirs.pi, &scheme.pir(&own.alpha, &probe)?),
            Factor::Pi => scheme.pic(&own.pi, &scheme.pir(&theirs.alpha, &probe)?),
        };
        Ok(decision.is_match())
    })?;
    Ok(estimate(matches, trials, 3, cfg))
}

/// `FMR^Div_Pi`: old helper data of `u` against a renewed reference of `u`.
pub fn est_fmr_div(scheme: &dyn BtpScheme, pop: &Population, trials: u64, cfg: &EstimationConfig) -> Result<AdvantageEstimate> {
    let matches = count_trials(trials, cfg.seeds.derive("diversity"), |rng| {
        let u = pop.random_user(rng);
        let probe = pop.draw(u, rng)?;
        let first = pop.draw(u, rng)?;
        let renewed = scheme.pie(&first, rng)?;
        let second = pop.draw(u, rng)?;
        let old = scheme.pie(&second, rng)?;
        Ok(scheme.pic(&renewed.pi, &scheme.pir(&old.alpha, &probe)?).is_match())
    })?;
    Ok(estimate(matches, trials, 3, cfg))
}

/// `H = -log2 FMR^Div`, defined for positive rates only.
pub fn diversity_entropy(fmr_div: f64) -> Option<f64> {
    (fmr_div > 0.0).then(|| -fmr_div.log2())
}

/// Monte Carlo `MR_{d<=tau}(x)`, for dimensions beyond the exact mode.
pub fn est_mr_of_feature(pop: &Population, x: &FeatureElement, tau: u32, trials: u64, cfg: &EstimationConfig) -> Result<AdvantageEstimate> {
    check_dimension(pop.n(), x)?;
    let hits = count_trials(trials, cfg.seeds.derive("mr-of-feature"), |rng| within(x, &pop.draw_mixture(rng), tau))?;
    Ok(estimate(hits, trials, 1, cfg))
}

/// `rMR_Pi(x)`: probability that a template of `X(U)` accepts `x`.
pub fn rmr_of_feature(
    scheme: &dyn BtpScheme,
    pop: &Population,
    x: &FeatureElement,
    trials: u64,
    cfg: &EstimationConfig,
) -> Result<AdvantageEstimate> {
    check_dimension(pop.n(), x)?;
    let hits = count_trials(trials, cfg.seeds.derive("rmr-of-feature"), |rng| {
        let enrolled = pop.draw_mixture(rng);
        let pt = scheme.pie(&enrolled, rng)?;
        Ok(scheme.verify(&pt, x)?.is_match())
    })?;
    Ok(estimate(hits, trials, 1, cfg))
}

/// `P_tau(x)`: probability that the `tau`-balls around `x` and `X(U)` meet.
pub fn est_overlap_probability(
    pop: &Population,
    x: &FeatureElement,
    tau: u32,
    trials: u64,
    cfg: &EstimationConfig,
) -> Result<AdvantageEstimate> {
    check_dimension(pop.n(), x)?;
    let hits =
        count_trials(trials, cfg.seeds.derive("overlap"), |rng| crate::population::neighborhood_overlap(x, &pop.draw_mixture(rng), tau))?;
    Ok(estimate(hits, trials, 1, cfg))
}

fn accepted_probes(scheme: &dyn BtpScheme, pop: &Population, pt: &ProtectedTemplate, trials: u64, rng: &mut dyn RngCore) -> Result<u64> {
    let mut hits = 0;
    for _ in 0..trials {
        let probe = pop.draw_mixture(rng);
        hits += u64::from(scheme.verify(pt, &probe)?.is_match());
    }
    Ok(hits)
}

/// `MR_Pi(pi, alpha)`: share of `X(U)` accepted by one template.
pub fn pt_match_rate(
    scheme: &dyn BtpScheme,
    pop: &Population,
    pt: &ProtectedTemplate,
    trials: u64,
    cfg: &EstimationConfig,
) -> Result<AdvantageEstimate> {
    let hits = count_trials(trials, cfg.seeds.derive("pt-match-rate"), |rng| {
        let probe = pop.draw_mixture(rng);
        Ok(scheme.verify(pt, &probe)?.is_match())
    })?;
    Ok(estimate(hits, trials, 1, cfg))
}

/// `MR_Pi`, `sigma` and `C` from `outer` templates of `PIE(X(U))`, each
/// rated with `inner` probes.
pub fn pt_match_stats(scheme: &dyn BtpScheme, pop: &Population, outer: u64, inner: u64, cfg: &EstimationConfig) -> Result<MatchRateStats> {
    let seeds = cfg.seeds.derive("pt-match-stats");
    let rates: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.rng(i, Role::Challenger);
            let enrolled = pop.draw_mixture(&mut rng);
            let pt = scheme.pie(&enrolled, &mut rng)?;
            let mut probe_rng = seeds.rng(i, Role::ChallengerOracle);
            Ok(accepted_probes(scheme, pop, &pt, inner, &mut probe_rng)? as f64 / inner as f64)
        })
        .collect::<Result<_>>()?;
    MatchRateStats::from_rates(rates, inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ConstantScheme, FuzzyCommitment, LinearCode, PlaintextScheme, RotationScheme};
    use crate::PopulationConfig;

    fn pop() -> Population {
        Population::generate(&PopulationConfig::default()).unwrap()
    }

    fn cfg() -> EstimationConfig {
        EstimationConfig::new(7)
    }

    #[test]
    fn baseline_limits() {
        let p = pop();
        let (fnmr, fmr) = est_baseline_rates(&p, 7, 2000, &cfg()).unwrap();
        assert_eq!((fnmr.point, fmr.point), (0.0, 1.0));
        let noiseless = Population::from_centers(p.centers().to_vec(), 0.0, 1).unwrap();
        assert_eq!(est_baseline_rates(&noiseless, 0, 2000, &cfg()).unwrap().0.point, 0.0);
    }

    #[test]
    fn plaintext_fnmr_is_the_baseline_fnmr() {
        let p = pop();
        let plain = PlaintextScheme::new(7, 1).unwrap();
        let (baseline, fmr) = est_baseline_rates(&p, 1, 5000, &cfg()).unwrap();
        assert_eq!(est_scheme_fnmr(&plain, &p, 5000, &cfg()).unwrap(), baseline);
        assert_eq!(est_fmr_bp(&plain, &p, 5000, &cfg()).unwrap().point, fmr.point);
        assert_eq!(est_fmr_tp(&plain, &p, Factor::Ad, 5000, &cfg()).unwrap().point, fmr.point);
    }

    #[test]
    fn noiseless_fuzzy_commitment_never_rejects() {
        let p = Population::from_centers(pop().centers().to_vec(), 0.0, 1).unwrap();
        let fc = FuzzyCommitment::new(LinearCode::hamming_7_4());
        assert_eq!(est_scheme_fnmr(&fc, &p, 3000, &cfg()).unwrap().point, 0.0);
    }

    #[test]
    fn full_threshold_rotation_matches_everything() {
        let p = pop();
        let rot = RotationScheme::new(7, 7).unwrap();
        for factor in [Factor::Ad, Factor::Pi] {
            assert_eq!(est_fmr_tp(&rot, &p, factor, 1000, &cfg()).unwrap().point, 1.0);
        }
        let pt = rot.pie(&p.centers()[0], &mut SeedSpace::new(1).single()).unwrap();
        assert_eq!(pt_match_rate(&rot, &p, &pt, 1000, &cfg()).unwrap().point, 1.0);
    }

    #[test]
    fn distant_noiseless_centres_give_no_impostor_matches() {
        let centers = ["0000000", "1111111", "1110000"].iter().map(|s| s.parse().unwrap()).collect();
        let p = Population::from_centers(centers, 0.0, 1).unwrap();
        let fc = FuzzyCommitment::new(LinearCode::hamming_7_4());
        assert_eq!(est_fmr_bp(&fc, &p, 2000, &cfg()).unwrap().point, 0.0);
        let far: FeatureElement = "0001111".parse().unwrap();
        assert_eq!(rmr_of_feature(&fc, &p, &far, 2000, &cfg()).unwrap().point, 0.0);
    }

    #[test]
    fn accept_all_statistics() {
        let stats = pt_match_stats(&ConstantScheme::new(7, true).unwrap(), &pop(), 200, 50, &cfg()).unwrap();
        assert_eq!((stats.mean, stats.std_dev, stats.variation_coeff), (1.0, 0.0, 0.0));
    }

    #[test]
    fn chebyshev_holds_on_measured_rates() {
        let fc = FuzzyCommitment::new(LinearCode::hamming_7_4());
        let stats = pt_match_stats(&fc, &pop(), 2000, 200, &cfg()).unwrap();
        assert!(stats.fraction_above(stats.chebyshev_threshold(0.25)) >= 0.75);
    }

    #[test]
    fn entropy() {
        assert_eq!(diversity_entropy(0.25), Some(2.0));
        assert_eq!(diversity_entropy(0.0), None);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let p = pop();
        let fc = FuzzyCommitment::new(LinearCode::hamming_7_4());
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = single.install(|| est_fmr_div(&fc, &p, 4000, &cfg()).unwrap());
        let b = est_fmr_div(&fc, &p, 4000, &cfg()).unwrap();
        assert_eq!(a, b);
    }
}
