//! Feature-level match rates and their extrema (`m`-values, `p_tau`, `q_tau`).

use super::estimate::{est_mr_of_feature, rmr_of_feature, EstimationConfig};
use super::exact::{require_exact, ExactModel, MValue, Provenance, EXACT_MAX_N};
use crate::error::{BtpError, Result};
use crate::population::{FeatureElement, Population};
use crate::schemes::{check_dimension, BtpScheme};

/// Largest dimension for which [`mr_of_feature`] is evaluated in closed form.
pub const CLOSED_FORM_MAX_N: usize = 20;

/// `MR_{d<=tau}(x)`, the average over users of the closed-form ball
/// probability around each center.
pub fn mr_of_feature(pop: &Population, x: &FeatureElement, tau: u32) -> Result<f64> {
    if pop.n() > CLOSED_FORM_MAX_N {
        return Err(BtpError::Mode(format!(
            "closed-form match rate needs n <= {CLOSED_FORM_MAX_N}, got {}; use the Monte Carlo estimator",
            pop.n()
        )));
    }
    check_dimension(pop.n(), x)?;
    let mut total = 0.0;
    for u in 0..pop.users() {
        total += pop.ball_probability(u, x, tau)?;
    }
    Ok(total / pop.users() as f64)
}

/// How the candidate search behaves once `n` is too large for a full scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSearch {
    /// Mixture samples added to the centers.
    pub samples: usize,
    /// Monte Carlo trials per candidate where no closed form is available.
    pub trials: u64,
    pub estimation: EstimationConfig,
}

impl CandidateSearch {
    pub fn new(seed: u64) -> Self {
        CandidateSearch { samples: 256, trials: 2_000, estimation: EstimationConfig::new(seed) }
    }

    fn candidates(&self, pop: &Population) -> Vec<FeatureElement> {
        let mut rng = self.estimation.seeds.derive("candidates").single();
        let mut out = pop.centers().to_vec();
        out.extend((0..self.samples).map(|_| pop.draw_mixture(&mut rng)));
        out.sort();
        out.dedup();
        out
    }
}

fn argmax(scores: impl Iterator<Item = Result<(FeatureElement, f64)>>) -> Result<(FeatureElement, f64)> {
    let mut best: Option<(FeatureElement, f64)> = None;
    for item in scores {
        let (x, v) = item?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((x, v));
        }
    }
    best.ok_or_else(|| BtpError::config("empty candidate set"))
}

/// `m_{d<=tau}` with a witness: a full scan of `M` for `n <= 12`, otherwise
/// the best candidate, reported as a lower bound.
pub fn extremal_mr(pop: &Population, tau: u32, search: &CandidateSearch) -> Result<MValue> {
    if pop.n() <= EXACT_MAX_N {
        let (witness, value) = argmax(FeatureElement::all(pop.n())?.map(|x| Ok((x, mr_of_feature(pop, &x, tau)?))))?;
        return Ok(MValue { value, witness, provenance: Provenance::Exact });
    }
    let (witness, value) = argmax(search.candidates(pop).into_iter().map(|x| {
        let value = match mr_of_feature(pop, &x, tau) {
            Ok(v) => v,
            Err(BtpError::Mode(_)) => est_mr_of_feature(pop, &x, tau, search.trials, &search.estimation)?.point,
            Err(e) => return Err(e),
        };
        Ok((x, value))
    }))?;
    Ok(MValue { value, witness, provenance: Provenance::LowerBound })
}

/// `m_Pi` with a witness, by exhaustive enumeration when possible.
pub fn extremal_rmr(scheme: &dyn BtpScheme, pop: &Population, search: &CandidateSearch) -> Result<MValue> {
    if pop.n() <= EXACT_MAX_N {
        let (value, witness) = ExactModel::new(scheme, pop)?.extremal_rmr();
        return Ok(MValue { value, witness, provenance: Provenance::Exact });
    }
    let (witness, value) = argmax(
        search.candidates(pop).into_iter().map(|x| Ok((x, rmr_of_feature(scheme, pop, &x, search.trials, &search.estimation)?.point))),
    )?;
    Ok(MValue { value, witness, provenance: Provenance::LowerBound })
}

/// `P_tau(x)`: the `tau`-balls around `x` and `x' <- X(U)` intersect
/// exactly when `d(x, x') <= 2 tau`.
pub fn overlap_probability(pop: &Population, x: &FeatureElement, tau: u32) -> Result<f64> {
    mr_of_feature(pop, x, tau.saturating_mul(2))
}

/// `(p_tau, q_tau)`: the maximum and minimum of `P_tau` over `M`.
pub fn overlap_rates(pop: &Population, tau: u32) -> Result<(MValue, MValue)> {
    require_exact(pop.n())?;
    let mut max: Option<(FeatureElement, f64)> = None;
    let mut min: Option<(FeatureElement, f64)> = None;
    for x in FeatureElement::all(pop.n())? {
        let v = overlap_probability(pop, &x, tau)?;
        if max.is_none_or(|(_, m)| v > m) {
            max = Some((x, v));
        }
        if min.is_none_or(|(_, m)| v < m) {
            min = Some((x, v));
        }
    }
    let wrap = |(witness, value): (FeatureElement, f64)| MValue { value, witness, provenance: Provenance::Exact };
    Ok((wrap(max.expect("M is nonempty")), wrap(min.expect("M is nonempty"))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{FuzzyCommitment, LinearCode, PlaintextScheme};
    use crate::{hamming_distance, PopulationConfig};

    fn pop() -> Population {
        Population::generate(&PopulationConfig::default()).unwrap()
    }

    #[test]
    fn mr_limits() {
        let p = pop();
        let x: FeatureElement = "0110010".parse().unwrap();
        assert!((mr_of_feature(&p, &x, 7).unwrap() - 1.0).abs() < 1e-12);
        let noiseless = Population::from_centers(p.centers().to_vec(), 0.0, 1).unwrap();
        for tau in 0..4 {
            let within = p.centers().iter().filter(|c| hamming_distance(c, &x).unwrap() <= tau).count();
            assert!((mr_of_feature(&noiseless, &x, tau).unwrap() - within as f64 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mr_matches_brute_force_sum() {
        let p = pop();
        let c0 = p.centers()[0];
        let brute: f64 = FeatureElement::all(7)
            .unwrap()
            .filter(|y| hamming_distance(&c0, y).unwrap() <= 1)
            .map(|y| p.mixture_probability(&y).unwrap())
            .sum();
        assert!((mr_of_feature(&p, &c0, 1).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn shared_center_gives_unit_m_value() {
        let c: FeatureElement = "1011001".parse().unwrap();
        let p = Population::from_centers(vec![c; 4], 0.0, 1).unwrap();
        let m = extremal_mr(&p, 0, &CandidateSearch::new(1)).unwrap();
        assert_eq!((m.value, m.witness, m.provenance), (1.0, c, Provenance::Exact));
    }

    #[test]
    fn m_values_grow_with_tau() {
        let p = pop();
        let search = CandidateSearch::new(1);
        let values: Vec<f64> = (0..=7).map(|t| extremal_mr(&p, t, &search).unwrap().value).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        for x in FeatureElement::all(7).unwrap() {
            assert!(mr_of_feature(&p, &x, 1).unwrap() <= values[1] + 1e-15);
        }
    }

    #[test]
    fn approximate_mode_is_flagged() {
        let p = Population::generate(&PopulationConfig { n: 16, ..Default::default() }).unwrap();
        let m = extremal_mr(&p, 1, &CandidateSearch::new(1)).unwrap();
        assert_eq!(m.provenance, Provenance::LowerBound);
        assert!(m.value > 0.0);
    }

    #[test]
    fn plaintext_reverse_rate_is_the_forward_rate() {
        let p = pop();
        let plain = PlaintextScheme::new(7, 1).unwrap();
        let model = ExactModel::new(&plain, &p).unwrap();
        for x in FeatureElement::all(7).unwrap() {
            assert!((model.rmr(&x).unwrap() - mr_of_feature(&p, &x, 1).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_laws() {
        let p = pop();
        let (p4, q4) = overlap_rates(&p, 4).unwrap();
        assert!((p4.value - 1.0).abs() < 1e-12 && (q4.value - 1.0).abs() < 1e-12);
        let (p0, q0) = overlap_rates(&p, 0).unwrap();
        assert!(q0.value <= 1.0 / 128.0 && 1.0 / 128.0 <= p0.value);
        let mut last = (0.0, 0.0);
        for tau in 0..=4 {
            let (pt, qt) = overlap_rates(&p, tau).unwrap();
            assert!(pt.value >= last.0 - 1e-15 && qt.value >= last.1 - 1e-15);
            last = (pt.value, qt.value);
        }
    }

    #[test]
    fn overlap_by_double_enumeration() {
        let p = pop();
        let all: Vec<FeatureElement> = FeatureElement::all(7).unwrap().collect();
        let brute = |x: &FeatureElement| -> f64 {
            all.iter()
                .filter(|y| all.iter().any(|z| hamming_distance(x, z).unwrap() <= 1 && hamming_distance(y, z).unwrap() <= 1))
                .map(|y| p.mixture_probability(y).unwrap())
                .sum()
        };
        let values: Vec<f64> = all.iter().map(brute).collect();
        let (pt, qt) = overlap_rates(&p, 1).unwrap();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        assert!((pt.value - max).abs() < 1e-12 && (qt.value - min).abs() < 1e-12);
    }

    #[test]
    fn exact_reverse_m_value_matches_scan() {
        let p = pop();
        let fc = FuzzyCommitment::new(LinearCode::hamming_7_4());
        let m = extremal_rmr(&fc, &p, &CandidateSearch::new(1)).unwrap();
        let model = ExactModel::new(&fc, &p).unwrap();
        let scan = FeatureElement::all(7).unwrap().map(|x| model.rmr(&x).unwrap()).fold(f64::MIN, f64::max);
        assert!((m.value - scan).abs() < 1e-12);
    }
}
