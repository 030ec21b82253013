//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one pass/fail line; the process fails if any
//! criterion does.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use btpgame::adversaries::{
    irr_adversary, n_delta, unlink_adversary, AdversaryContext, CrossComparator, IrrMode, PalSampler, PalSamplerConfig,
};
use btpgame::games::{est_cross_match_rates, run_al_irr_game, run_pal_irr_game, run_unlink_game, GameConfig, GameSetup};
use btpgame::metrics::{
    est_baseline_rates, est_fmr_bp, est_fmr_div, est_fmr_tp, est_overlap_probability, est_scheme_fnmr, exact_baseline_rates, extremal_mr,
    overlap_probability, overlap_rates, pt_match_stats, rmr_of_feature, AdvantageEstimate, CandidateSearch, Confidence, EstimationConfig,
    ExactModel,
};
use btpgame::schemes::{BtpScheme, Factor, FuzzyCommitment, LambdaSet, LinearCode, PlaintextScheme};
use btpgame::verify::{check_thm_unarch_unlink, VerdictStatus, VerifyConfig};
use btpgame::{hamming_distance, lambda_project, neighborhood_overlap, FeatureElement, Population, PopulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn default_pop() -> Arc<Population> {
    Arc::new(Population::generate(&PopulationConfig::default()).unwrap())
}

fn fc() -> Arc<dyn BtpScheme> {
    Arc::new(FuzzyCommitment::new(LinearCode::hamming_7_4()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `Pr[d(x, X(U)) <= r]` maximised (or minimised) over `x`, by summing the
/// mixture over every pair of points.
fn ball_extreme(pop: &Population, r: u32, max: bool) -> f64 {
    let n = pop.n();
    let points: Vec<FeatureElement> = FeatureElement::all(n).unwrap().collect();
    let mass: Vec<f64> = points.iter().map(|y| pop.mixture_probability(y).unwrap()).collect();
    let values =
        points.iter().map(|x| points.iter().zip(&mass).filter(|(y, _)| hamming_distance(x, y).unwrap() <= r).map(|(_, m)| m).sum::<f64>());
    if max {
        values.fold(f64::MIN, f64::max)
    } else {
        values.fold(f64::MAX, f64::min)
    }
}

fn criterion_1() -> Check {
    let pop = default_pop();
    let scheme = fc();
    // MR_Pi by double enumeration: the [7,4] code is perfect, so a template
    // of x accepts y exactly when d(x, y) <= 1 (criterion 6 checks this)
    let points: Vec<FeatureElement> = FeatureElement::all(7).unwrap().collect();
    let mass: Vec<f64> = points.iter().map(|x| pop.mixture_probability(x).unwrap()).collect();
    let mut mr = 0.0;
    for (x, mx) in points.iter().zip(&mass) {
        for (y, my) in points.iter().zip(&mass) {
            if hamming_distance(x, y).unwrap() <= 1 {
                mr += mx * my;
            }
        }
    }
    let model = ExactModel::new(&*scheme, &pop).map_err(|e| e.to_string())?.match_rate_stats().map_err(|e| e.to_string())?.mean;
    ensure((mr - model).abs() < 1e-12, || format!("enumerations disagree: {mr} vs {model}"))?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let verdict =
        pool.install(|| check_thm_unarch_unlink(scheme.clone(), pop.clone(), &VerifyConfig::new(1, 20_000))).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(verdict.notes.iter().any(|n| n.contains("exhaustive")), || "self-match hypothesis was not checked exhaustively".into())?;
    ensure(verdict.status == VerdictStatus::Pass, || format!("verdict {:?}", verdict.status))?;
    let adv = verdict.lhs.ok_or("no advantage")?;
    let gap = (adv - (1.0 - mr)).abs();
    ensure(gap <= 0.03, || format!("Adv = {adv:.4}, 1 - MR = {:.4}, gap {gap:.4} > 0.03", 1.0 - mr))?;
    ensure(elapsed <= Duration::from_secs(60), || format!("took {elapsed:?} on one worker"))?;
    Ok(format!("Adv = {adv:.4}, 1 - MR_exact = {:.4}, gap {gap:.4} <= 0.03, {:.2}s on one worker", 1.0 - mr, elapsed.as_secs_f64()))
}

fn criterion_2() -> Check {
    let pop = default_pop();
    let scheme = fc();
    let stats = pt_match_stats(&*scheme, &pop, 2_000, 1_000, &EstimationConfig::new(2)).map_err(|e| e.to_string())?;
    ensure(stats.c_squared() < 0.16, || format!("measured C^2 = {} is not below 0.16", stats.c_squared()))?;
    let sampler = PalSampler::new(PalSamplerConfig { delta: 0.16, gamma: 0.5 }, &stats).map_err(|e| e.to_string())?;
    let setup = GameSetup::new(scheme, pop, LambdaSet::PiAd);
    let result = run_pal_irr_game(&setup, &sampler, &GameConfig::new(2, 5_000)).map_err(|e| e.to_string())?;
    let (w, se) = (result.win_rate.point, result.win_rate.std_error);
    ensure(w > 0.5 - 3.0 * se, || format!("win rate {w} not above 0.5 - 3 se"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1_000 {
        let mr: f64 = rng.gen_range(0.05..1.0);
        let sigma: f64 = rng.gen_range(0.0..mr * 0.39);
        let c2 = (sigma / mr).powi(2);
        let delta = rng.gen_range(c2.max(1e-3) + 1e-3..0.9);
        let gamma = rng.gen_range(delta + 1e-3..0.999);
        let mu = mr - sigma / delta.sqrt();
        if mu <= 0.0 {
            continue;
        }
        let n = n_delta(mu, delta, gamma).map_err(|e| e.to_string())?;
        let target = (gamma - delta) / (1.0 - delta);
        let below = |k: u64| (1.0 - mu).powi(k as i32) < target;
        ensure(n >= 1 && below(n) && (n == 1 || !below(n - 1)), || {
            format!("N_delta = {n} not minimal for mu {mu}, delta {delta}, gamma {gamma}")
        })?;
    }
    Ok(format!(
        "C^2 = {:.4}, N_delta = {}, win {w:.4} > {:.4}; N_delta minimal on 1000 configs",
        stats.c_squared(),
        sampler.n_delta,
        0.5 - 3.0 * se
    ))
}

/// Checks the reduction bound with independently enumerated `p`, `q`, `m`.
fn reduction_bound(scheme: Arc<dyn BtpScheme>, pop: Arc<Population>, lambda: LambdaSet, tau: u32, inner: &str) -> Check {
    let p = ball_extreme(&pop, 2 * tau, true);
    let q = ball_extreme(&pop, 2 * tau, false);
    let m = ball_extreme(&pop, tau, true);
    let ctx = AdversaryContext::new(3);
    let setup = GameSetup::new(scheme, pop, lambda).with_tau(Some(tau));
    let cfg = GameConfig::new(3, 10_000);
    let adv_a = irr_adversary(inner, &setup, IrrMode::Al(tau), &ctx).map_err(|e| e.to_string())?;
    let al = run_al_irr_game(&setup, tau, &*adv_a, &cfg).map_err(|e| e.to_string())?;
    let a = al.win_rate.point - m;
    let reduction = unlink_adversary(&format!("reduction(inner={inner})"), &setup, tau, &ctx).map_err(|e| e.to_string())?;
    let unlink = run_unlink_game(&setup, &*reduction, &cfg).map_err(|e| e.to_string())?;
    let b = unlink.advantage.point;
    let se = (unlink.advantage.std_error.powi(2) + ((1.0 - p) * al.win_rate.std_error).powi(2)).sqrt();
    let rhs = (1.0 - p) * a - (p - q) * m;
    ensure(b >= rhs - 3.0 * se, || format!("Adv_B = {b:.4} < {rhs:.4} - 3 se ({se:.4})"))?;
    Ok(format!("{} {lambda} tau={tau}: Adv_B {b:.4} >= {rhs:.4} - 3se", setup.scheme.name()))
}

fn criterion_3() -> Check {
    let pop = default_pop();
    let plain = reduction_bound(Arc::new(PlaintextScheme::new(7, 0).unwrap()), pop.clone(), LambdaSet::Pi, 0, "inverter")?;
    let coset = reduction_bound(fc(), pop, LambdaSet::Ad, 1, "coset-sampler")?;
    Ok(format!("{plain}; {coset}"))
}

fn criterion_4() -> Check {
    let pop = default_pop();
    let ctx = AdversaryContext::new(4);
    let cfg = GameConfig::new(4, 10_000).recording();
    let mut summary = Vec::new();
    for (lambda, name) in
        [(LambdaSet::Pi, "blind"), (LambdaSet::Ad, "coset-sampler"), (LambdaSet::PiAd, "pal-sampler"), (LambdaSet::PiAd, "inverter")]
    {
        let setup = GameSetup::new(fc(), pop.clone(), lambda);
        let adv = irr_adversary(name, &setup.clone().with_tau(Some(1)), IrrMode::Al(1), &ctx).map_err(|e| e.to_string())?;
        let run = |tau: Option<u32>| {
            let outcome = match tau {
                Some(t) => run_al_irr_game(&setup.clone().with_tau(Some(t)), t, &*adv, &cfg),
                None => run_pal_irr_game(&setup, &*adv, &cfg),
            };
            outcome.map(|r| r.outcomes.expect("recorded"))
        };
        let (al0, al1, pal) =
            (run(Some(0)).map_err(|e| e.to_string())?, run(Some(1)).map_err(|e| e.to_string())?, run(None).map_err(|e| e.to_string())?);
        let broken = (0..al0.len()).filter(|&i| (al0[i] && !al1[i]) || (al1[i] && !pal[i])).count();
        ensure(al0.len() == 10_000 && broken == 0, || format!("{name} on {lambda}: {broken} trials break the inclusions"))?;
        let count = |v: &[bool]| v.iter().filter(|&&w| w).count();
        summary.push(format!("{name}/{lambda} {}<={}<={}", count(&al0), count(&al1), count(&pal)));
    }
    Ok(format!("inclusions hold on all 10000 trials: {}", summary.join(", ")))
}

struct Tally {
    name: &'static str,
    hits: u32,
}

fn criterion_5() -> Check {
    let pop = default_pop();
    let scheme = fc();
    let tau = 1;
    let model = ExactModel::new(&*scheme, &pop).map_err(|e| e.to_string())?;
    let (fnmr0, fmr0) = exact_baseline_rates(&pop, tau).map_err(|e| e.to_string())?;
    let stats0 = model.match_rate_stats().map_err(|e| e.to_string())?;
    let (rmr_value, rmr_x) = model.extremal_rmr();
    let (p_tau, q_tau) = overlap_rates(&pop, tau).map_err(|e| e.to_string())?;
    let p_value = overlap_probability(&pop, &p_tau.witness, tau).map_err(|e| e.to_string())?;
    let q_value = overlap_probability(&pop, &q_tau.witness, tau).map_err(|e| e.to_string())?;

    let names = [
        "fnmr_baseline",
        "fmr_baseline",
        "fnmr_scheme",
        "fmr_bp",
        "fmr_tp_ad",
        "fmr_tp_pi",
        "fmr_div",
        "rmr",
        "mr_pi",
        "mr_pi_sigma",
        "p_tau",
        "q_tau",
    ];
    let mut tallies: Vec<Tally> = names.iter().map(|&name| Tally { name, hits: 0 }).collect();
    let trials = 10_000;
    let z = Confidence::NINETY_NINE.z();
    for run in 0..100u64 {
        let cfg = EstimationConfig::new(1_000 + run).with_confidence(Confidence::NINETY_NINE);
        let err = |e: btpgame::BtpError| e.to_string();
        let (fnmr, fmr) = est_baseline_rates(&pop, tau, trials, &cfg).map_err(err)?;
        let stats = pt_match_stats(&*scheme, &pop, 400, 400, &cfg).map_err(err)?;
        let normal =
            |point: f64, se: f64| AdvantageEstimate { ci_low: point - z * se, ci_high: point + z * se, ..AdvantageEstimate::exact(point) };
        let estimates = [
            (fnmr, fnmr0),
            (fmr, fmr0),
            (est_scheme_fnmr(&*scheme, &pop, trials, &cfg).map_err(err)?, model.fnmr()),
            (est_fmr_bp(&*scheme, &pop, trials, &cfg).map_err(err)?, model.fmr_bp()),
            (est_fmr_tp(&*scheme, &pop, Factor::Ad, trials, &cfg).map_err(err)?, model.fmr_tp_ad()),
            (est_fmr_tp(&*scheme, &pop, Factor::Pi, trials, &cfg).map_err(err)?, model.fmr_tp_pi()),
            (est_fmr_div(&*scheme, &pop, trials, &cfg).map_err(err)?, model.fmr_div()),
            (rmr_of_feature(&*scheme, &pop, &rmr_x, trials, &cfg).map_err(err)?, rmr_value),
            (normal(stats.mean, stats.mean_se), stats0.mean),
            (normal(stats.std_dev, stats.std_dev_se), stats0.std_dev),
            (est_overlap_probability(&pop, &p_tau.witness, tau, trials, &cfg).map_err(err)?, p_value),
            (est_overlap_probability(&pop, &q_tau.witness, tau, trials, &cfg).map_err(err)?, q_value),
        ];
        for (tally, (est, exact)) in tallies.iter_mut().zip(estimates) {
            tally.hits += u32::from(est.ci_low <= exact && exact <= est.ci_high);
        }
    }
    let summary: Vec<String> = tallies.iter().map(|t| format!("{} {}", t.name, t.hits)).collect();
    ensure(tallies.iter().all(|t| t.hits >= 95), || format!("coverage below 95/100: {}", summary.join(", ")))?;
    Ok(format!("99% coverage out of 100 runs: {}", summary.join(", ")))
}

fn fc_matches_iff_within_radius(code: LinearCode) -> Result<usize, String> {
    let (n, t) = (code.n(), code.t());
    let scheme = FuzzyCommitment::new(code);
    let mut checked = 0;
    for x in FeatureElement::all(n).unwrap() {
        for (_, pt) in scheme.pie_outcomes(&x).unwrap() {
            for y in FeatureElement::all(n).unwrap() {
                let d = hamming_distance(&x, &y).unwrap();
                let matched = scheme.verify(&pt, &y).unwrap().is_match();
                ensure(matched == (d <= t), || format!("[{n}] x = {x}, y = {y}: d = {d}, t = {t}, match = {matched}"))?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn criterion_6() -> Check {
    let mut cases = fc_matches_iff_within_radius(LinearCode::hamming_7_4())?;
    for n in 2..=8 {
        cases += fc_matches_iff_within_radius(LinearCode::repetition(n).unwrap())?;
    }

    for n in 1..=8usize {
        let points: Vec<FeatureElement> = FeatureElement::all(n).unwrap().collect();
        for x0 in &points {
            for x1 in &points {
                let d = hamming_distance(x0, x1).unwrap();
                for tau in 0..=n as u32 {
                    let meet = points.iter().any(|z| hamming_distance(x0, z).unwrap() <= tau && hamming_distance(x1, z).unwrap() <= tau);
                    let claimed = neighborhood_overlap(x0, x1, tau).unwrap();
                    ensure(claimed == meet && meet == (d <= 2 * tau), || format!("overlap of {x0}, {x1} at tau {tau}"))?;
                }
            }
        }
    }

    let mut pops = 0;
    for (n, p, seed) in [(4, 0.1, 1), (6, 0.03, 2), (7, 0.03, 1), (8, 0.2, 3), (8, 0.0, 4)] {
        let pop = Population::generate(&PopulationConfig { n, p, seed, users: 6, centers: None }).unwrap();
        let uniform = (n as f64).exp2().recip();
        let (p0, q0) = overlap_rates(&pop, 0).map_err(|e| e.to_string())?;
        ensure(q0.value <= uniform + 1e-15 && uniform <= p0.value + 1e-15, || {
            format!("q0 {} / 2^-n {uniform} / p0 {}", q0.value, p0.value)
        })?;
        let mut last = (0.0, 0.0, 0.0);
        for tau in 0..=n as u32 {
            let m = extremal_mr(&pop, tau, &CandidateSearch::new(1)).map_err(|e| e.to_string())?.value;
            let (p_tau, q_tau) = overlap_rates(&pop, tau).map_err(|e| e.to_string())?;
            let now = (m, p_tau.value, q_tau.value);
            ensure(now.0 >= last.0 - 1e-12 && now.1 >= last.1 - 1e-12 && now.2 >= last.2 - 1e-12, || {
                format!("n {n}: not monotone at tau {tau}")
            })?;
            ensure((m - ball_extreme(&pop, tau, true)).abs() < 1e-12, || format!("n {n}: m at tau {tau} disagrees with enumeration"))?;
            last = now;
        }
        pops += 1;
    }

    let scheme = FuzzyCommitment::new(LinearCode::hamming_7_4());
    let mut projections = 0;
    for x in FeatureElement::all(7).unwrap() {
        for (_, pt) in scheme.pie_outcomes(&x).unwrap() {
            let pi = lambda_project(&pt, LambdaSet::Pi);
            let ad = lambda_project(&pt, LambdaSet::Ad);
            let full = lambda_project(&pt, LambdaSet::PiAd);
            let ok = (pi.pi, pi.alpha) == (Some(pt.pi), None)
                && (ad.pi, ad.alpha) == (None, Some(pt.alpha))
                && full.template() == Some(pt)
                && full.project(LambdaSet::Pi) == Ok(pi)
                && full.project(LambdaSet::Ad) == Ok(ad)
                && pi.project(LambdaSet::Ad).is_err();
            ensure(ok, || format!("projection equations fail for {x}"))?;
            projections += 1;
        }
    }
    Ok(format!("{cases} fc (x, w, y) cases, overlap for n <= 8, {pops} populations monotone, {projections} projections"))
}

fn criterion_7() -> Check {
    let pop = default_pop();
    let mut summary = Vec::new();
    for lambda in [LambdaSet::PiAd, LambdaSet::Pi] {
        let setup = GameSetup::new(fc(), pop.clone(), lambda);
        let rates = est_cross_match_rates(&setup, &CrossComparator::default(), &GameConfig::new(7, 10_000)).map_err(|e| e.to_string())?;
        let se = (rates.identity_std_error.powi(2) + rates.unlink.advantage.std_error.powi(2)).sqrt();
        ensure(rates.agrees(3.0), || {
            format!("{lambda}: identity {} vs UNLINK {} (3 se = {})", rates.identity_advantage, rates.unlink.advantage.point, 3.0 * se)
        })?;
        summary
            .push(format!("{lambda}: |1 - (FCMR + FNCMR)| = {:.4} vs Adv {:.4}", rates.identity_advantage, rates.unlink.advantage.point));
    }
    Ok(summary.join("; "))
}

fn report_without_timings(jobs: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_btpgame"))
        .args(["verify", "--theorem", "all", "--seed", "42", "--jobs", jobs])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let cut = text.find("\"timings\"").ok_or("no timings field")?;
    let tail = &text[cut..];
    ensure(tail.matches(':').count() == 2 && !tail.contains(','), || format!("unexpected fields after timings: {tail}"))?;
    Ok(text.as_bytes()[..cut].to_vec())
}

fn criterion_8() -> Check {
    let first = report_without_timings("1")?;
    ensure(first == report_without_timings("1")?, || "two single-worker runs differ".into())?;
    ensure(first == report_without_timings("8")?, || "--jobs 1 and --jobs 8 differ".into())?;
    Ok(format!("{} report bytes identical across runs and worker counts", first.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("Theorem 3 reproduction", criterion_1),
        ("Theorem 2 reproduction", criterion_2),
        ("Theorem 4 bound", criterion_3),
        ("Theorem 1 couplings", criterion_4),
        ("estimator/oracle agreement", criterion_5),
        ("structural laws", criterion_6),
        ("FCMR/FNCMR identity", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS {title} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {title} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
