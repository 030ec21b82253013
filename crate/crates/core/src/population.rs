//! Hamming feature space, user population and the sampling oracle.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Bernoulli, Distribution};
use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BtpError, Result};
use crate::rng::SeedSpace;

/// Default per-role query budget of the sampling oracle.
pub const DEFAULT_QUERY_BUDGET: u64 = 1_000_000;

/// A point of the Hamming cube `{0,1}^n`, `1 <= n <= 64`.
///
/// Bit `i` is the `i`-th character of the textual form, so `"0100000"`
/// has only bit 1 set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureElement {
    bits: u64,
    len: u8,
}

impl FeatureElement {
    pub const MAX_BITS: usize = 64;

    pub fn new(bits: u64, len: usize) -> Result<Self> {
        check_len(len)?;
        if bits & !mask(len) != 0 {
            return Err(BtpError::config(format!("bit pattern {bits:#x} does not fit in {len} bits")));
        }
        Ok(FeatureElement { bits, len: len as u8 })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    /// The element whose bit pattern is `index`. Used for enumeration.
    pub(crate) fn from_index(index: u64, len: usize) -> Self {
        debug_assert!((1..=Self::MAX_BITS).contains(&len) && index & !mask(len) == 0);
        FeatureElement { bits: index, len: len as u8 }
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        check_len(len)?;
        Ok(FeatureElement { bits: rng.gen::<u64>() & mask(len), len: len as u8 })
    }

    /// Iterates over all `2^len` elements in index order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = FeatureElement>> {
        check_len(len)?;
        if len > 32 {
            return Err(BtpError::Mode(format!("refusing to enumerate 2^{len} feature elements")));
        }
        Ok((0..1u64 << len).map(move |i| FeatureElement::from_index(i, len)))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Position in the enumeration order of [`FeatureElement::all`].
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn bit(&self, i: usize) -> bool {
        i < self.len() && (self.bits >> i) & 1 == 1
    }

    pub fn with_flipped(&self, i: usize) -> Self {
        assert!(i < self.len(), "bit {i} out of range for length {}", self.len);
        FeatureElement { bits: self.bits ^ (1 << i), len: self.len }
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn xor(&self, other: &FeatureElement) -> Result<FeatureElement> {
        same_len(self, other)?;
        Ok(FeatureElement { bits: self.bits ^ other.bits, len: self.len })
    }

    /// Cyclic rotation: bit `i` of the result is bit `(i + r) mod n` of `self`.
    pub fn rotate(&self, r: usize) -> FeatureElement {
        let n = self.len();
        let r = r % n;
        if r == 0 {
            return *self;
        }
        let bits = ((self.bits >> r) | (self.bits << (n - r))) & mask(n);
        FeatureElement { bits, len: self.len }
    }

    /// Inverse of [`FeatureElement::rotate`].
    pub fn unrotate(&self, r: usize) -> FeatureElement {
        let n = self.len();
        self.rotate(n - r % n)
    }
}

pub(crate) fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len > FeatureElement::MAX_BITS {
        return Err(BtpError::config(format!("feature dimension must be in 1..={}, got {len}", FeatureElement::MAX_BITS)));
    }
    Ok(())
}

fn same_len(a: &FeatureElement, b: &FeatureElement) -> Result<()> {
    if a.len != b.len {
        return Err(BtpError::Dimension { expected: a.len(), actual: b.len() });
    }
    Ok(())
}

impl fmt::Display for FeatureElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for FeatureElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureElement({self})")
    }
}

impl FromStr for FeatureElement {
    type Err = BtpError;

    fn from_str(s: &str) -> Result<Self> {
        check_len(s.len())?;
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(BtpError::config(format!("invalid bitstring {s:?}"))),
            }
        }
        Ok(FeatureElement { bits, len: s.len() as u8 })
    }
}

impl Serialize for FeatureElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hamming distance: the number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &FeatureElement, b: &FeatureElement) -> Result<u32> {
    same_len(a, b)?;
    Ok((a.bits ^ b.bits).count_ones())
}

/// Whether the radius-`tau` balls around `x0` and `x1` intersect.
///
/// On the Hamming cube two balls of radius `tau` meet exactly when the
/// centers are at most `2 tau` apart (walk `tau` steps from each end).
pub fn neighborhood_overlap(x0: &FeatureElement, x1: &FeatureElement, tau: u32) -> Result<bool> {
    Ok(hamming_distance(x0, x1)? <= tau.saturating_mul(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    #[default]
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpaceConfig {
    pub n: usize,
    #[serde(default)]
    pub distance_kind: DistanceKind,
}

/// Parameters of [`Population::generate`]. Missing fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub n: usize,
    #[serde(rename = "U")]
    pub users: usize,
    pub p: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<FeatureElement>>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig { n: 7, users: 16, p: 0.03, seed: 1, centers: None }
    }
}

/// The user set: one center per user, each sample flips every bit of the
/// center independently with probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    n: usize,
    centers: Vec<FeatureElement>,
    flip_prob: f64,
    seed: u64,
    noise: Bernoulli,
}

impl Population {
    /// Draws `U` centers uniformly from `{0,1}^n` unless the config lists
    /// them explicitly.
    pub fn generate(cfg: &PopulationConfig) -> Result<Self> {
        check_len(cfg.n)?;
        let centers = match &cfg.centers {
            Some(centers) => {
                if centers.len() != cfg.users {
                    return Err(BtpError::config(format!("U = {} but {} centers were listed", cfg.users, centers.len())));
                }
                centers.clone()
            }
            None => {
                let mut rng = SeedSpace::new(cfg.seed).derive("population").single();
                (0..cfg.users).map(|_| FeatureElement::random(cfg.n, &mut rng)).collect::<Result<_>>()?
            }
        };
        Self::from_centers(centers, cfg.p, cfg.seed)
    }

    pub fn from_centers(centers: Vec<FeatureElement>, flip_prob: f64, seed: u64) -> Result<Self> {
        if centers.len() < 2 {
            return Err(BtpError::config(format!("population needs at least 2 users, got {}", centers.len())));
        }
        if !(0.0..0.5).contains(&flip_prob) {
            return Err(BtpError::config(format!("flip probability must lie in [0, 0.5), got {flip_prob}")));
        }
        let n = centers[0].len();
        if let Some(bad) = centers.iter().find(|c| c.len() != n) {
            return Err(BtpError::Dimension { expected: n, actual: bad.len() });
        }
        let noise = Bernoulli::new(flip_prob).map_err(|e| BtpError::config(e.to_string()))?;
        Ok(Population { n, centers, flip_prob, seed, noise })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn users(&self) -> usize {
        self.centers.len()
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn centers(&self) -> &[FeatureElement] {
        &self.centers
    }

    pub fn center(&self, u: usize) -> Result<FeatureElement> {
        self.centers.get(u).copied().ok_or(BtpError::UnknownUser { index: u, users: self.users() })
    }

    pub fn config(&self) -> PopulationConfig {
        PopulationConfig { n: self.n, users: self.users(), p: self.flip_prob, seed: self.seed, centers: Some(self.centers.clone()) }
    }

    /// Draws `x <- X_u` without query accounting.
    pub fn draw<R: RngCore + ?Sized>(&self, u: usize, rng: &mut R) -> Result<FeatureElement> {
        let center = self.center(u)?;
        let mut flips = 0u64;
        for i in 0..self.n {
            if self.noise.sample(rng) {
                flips |= 1 << i;
            }
        }
        Ok(FeatureElement { bits: center.bits ^ flips, len: center.len })
    }

    pub fn random_user<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.users())
    }

    /// An ordered pair of distinct users, uniform over `(U x U)^diff`.
    pub fn random_distinct_pair<R: RngCore + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u = self.random_user(rng);
        let mut v = rng.gen_range(0..self.users() - 1);
        if v >= u {
            v += 1;
        }
        (u, v)
    }

    /// Draws `x <- X(U)`: a uniformly chosen user, then a sample of it.
    pub fn draw_mixture<R: RngCore + ?Sized>(&self, rng: &mut R) -> FeatureElement {
        let u = self.random_user(rng);
        self.draw(u, rng).expect("user index in range")
    }

    /// `P(X_u = x) = p^d (1-p)^(n-d)` with `d = d(x, c_u)`.
    pub fn feature_probability(&self, u: usize, x: &FeatureElement) -> Result<f64> {
        let d = hamming_distance(&self.center(u)?, x)? as i32;
        Ok(self.flip_prob.powi(d) * (1.0 - self.flip_prob).powi(self.n as i32 - d))
    }

    /// `P(X(U) = x)`, the uniform mixture over users.
    pub fn mixture_probability(&self, x: &FeatureElement) -> Result<f64> {
        let mut total = 0.0;
        for u in 0..self.users() {
            total += self.feature_probability(u, x)?;
        }
        Ok(total / self.users() as f64)
    }

    /// `Pr[d(x, X_u) <= radius]` in closed form.
    pub fn ball_probability(&self, u: usize, x: &FeatureElement, radius: u32) -> Result<f64> {
        let d = hamming_distance(&self.center(u)?, x)?;
        Ok(ball_probability(self.n as u32, d, radius, self.flip_prob))
    }

    /// Exact probability vector of `X_u` over all `2^n` elements.
    pub(crate) fn user_distribution(&self, u: usize) -> Result<Vec<f64>> {
        FeatureElement::all(self.n)?.map(|x| self.feature_probability(u, &x)).collect()
    }
}

/// `Pr[d(x, c XOR E) <= radius]` where `d(x, c) = dist` and `E` flips each
/// of the `n` bits independently with probability `p`. Restoring `i` of the
/// `dist` differing bits and breaking `j` of the agreeing ones leaves
/// distance `dist - i + j`.
pub fn ball_probability(n: u32, dist: u32, radius: u32, p: f64) -> f64 {
    let q = 1.0 - p;
    let mut total = 0.0;
    for i in 0..=dist {
        for j in 0..=(n - dist) {
            if dist - i + j <= radius {
                let flips = (i + j) as i32;
                total += binomial(dist, i) * binomial(n - dist, j) * p.powi(flips) * q.powi(n as i32 - flips);
            }
        }
    }
    total.min(1.0)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The query-counted `Samp` oracle. One instance serves one role in one
/// trial; its noise stream is private to that role.
pub struct SamplingOracle<'a> {
    population: &'a Population,
    rng: &'a mut dyn RngCore,
    queries: u64,
    budget: u64,
}

impl<'a> SamplingOracle<'a> {
    pub fn new(population: &'a Population, budget: u64, rng: &'a mut dyn RngCore) -> Self {
        SamplingOracle { population, rng, queries: 0, budget }
    }

    pub fn population(&self) -> &Population {
        self.population
    }

    pub fn users(&self) -> usize {
        self.population.users()
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.queries
    }

    /// Returns a fresh `x <- X_u`.
    pub fn sample(&mut self, u: usize) -> Result<FeatureElement> {
        if u >= self.population.users() {
            return Err(BtpError::UnknownUser { index: u, users: self.population.users() });
        }
        if self.queries >= self.budget {
            return Err(BtpError::BudgetExhausted { budget: self.budget });
        }
        self.queries += 1;
        self.population.draw(u, &mut *self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Role;
    use proptest::prelude::*;

    fn fe(s: &str) -> FeatureElement {
        s.parse().unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hamming_distance(&fe("0000000"), &fe("0000000")).unwrap(), 0);
        assert_eq!(hamming_distance(&fe("1111111"), &fe("0000000")).unwrap(), 7);
        assert_eq!(hamming_distance(&fe("0101100"), &fe("0111100")).unwrap(), 1);
        assert!(matches!(hamming_distance(&fe("01"), &fe("011")), Err(BtpError::Dimension { expected: 2, actual: 3 })));
    }

    #[test]
    fn bitstring_roundtrip_and_bit_order() {
        let x = fe("0100000");
        assert_eq!(x.bits(), 0b10);
        assert_eq!(x.to_string(), "0100000");
        assert!("01x".parse::<FeatureElement>().is_err());
        assert!("".parse::<FeatureElement>().is_err());
    }

    #[test]
    fn rotation_inverts() {
        let x = fe("1101000");
        for r in 0..10 {
            assert_eq!(x.rotate(r).unrotate(r), x);
            assert_eq!(x.rotate(r).weight(), x.weight());
        }
        assert_eq!(fe("1000000").rotate(1), fe("0000001"));
    }

    #[test]
    fn generate_validates_config() {
        let mut cfg = PopulationConfig { users: 0, ..Default::default() };
        assert!(matches!(Population::generate(&cfg), Err(BtpError::Config(_))));
        cfg.users = 1;
        assert!(matches!(Population::generate(&cfg), Err(BtpError::Config(_))));
        cfg.users = 16;
        cfg.p = 0.6;
        assert!(matches!(Population::generate(&cfg), Err(BtpError::Config(_))));
        cfg.p = 0.5;
        assert!(Population::generate(&cfg).is_err());
        cfg.p = -0.1;
        assert!(Population::generate(&cfg).is_err());
    }

    #[test]
    fn generate_is_reproducible() {
        let cfg = PopulationConfig::default();
        let a = Population::generate(&cfg).unwrap();
        let b = Population::generate(&cfg).unwrap();
        assert_eq!(a.users(), 16);
        assert!(a.centers().iter().all(|c| c.len() == 7));
        assert_eq!(a.centers(), b.centers());
        let other = Population::generate(&PopulationConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.centers(), other.centers());
    }

    #[test]
    fn explicit_centers_are_used() {
        let cfg = PopulationConfig { n: 3, users: 2, p: 0.0, seed: 0, centers: Some(vec![fe("000"), fe("111")]) };
        let pop = Population::generate(&cfg).unwrap();
        assert_eq!(pop.center(1).unwrap(), fe("111"));
        let bad = PopulationConfig { users: 3, ..cfg };
        assert!(Population::generate(&bad).is_err());
    }

    #[test]
    fn noiseless_sampling_returns_center() {
        let pop = Population::generate(&PopulationConfig { p: 0.0, ..Default::default() }).unwrap();
        let mut rng = SeedSpace::new(3).rng(0, Role::Challenger);
        let mut oracle = SamplingOracle::new(&pop, 100, &mut rng);
        for u in 0..pop.users() {
            assert_eq!(oracle.sample(u).unwrap(), pop.center(u).unwrap());
        }
        assert_eq!(oracle.queries(), 16);
    }

    #[test]
    fn oracle_enforces_budget_and_index() {
        let pop = Population::generate(&PopulationConfig::default()).unwrap();
        let mut rng = SeedSpace::new(3).rng(0, Role::Challenger);
        let mut oracle = SamplingOracle::new(&pop, 2, &mut rng);
        assert!(matches!(oracle.sample(99), Err(BtpError::UnknownUser { .. })));
        oracle.sample(0).unwrap();
        oracle.sample(0).unwrap();
        assert_eq!(oracle.sample(0), Err(BtpError::BudgetExhausted { budget: 2 }));
        assert_eq!(oracle.queries(), 2);
    }

    #[test]
    fn per_bit_flip_frequency_matches_p() {
        let pop = Population::generate(&PopulationConfig::default()).unwrap();
        let mut rng = SeedSpace::new(11).rng(0, Role::ChallengerOracle);
        let mut oracle = SamplingOracle::new(&pop, DEFAULT_QUERY_BUDGET, &mut rng);
        let draws = 100_000;
        let center = pop.center(5).unwrap();
        let mut flips = 0u64;
        for _ in 0..draws {
            flips += hamming_distance(&oracle.sample(5).unwrap(), &center).unwrap() as u64;
        }
        let freq = flips as f64 / (draws as f64 * 7.0);
        assert!((freq - 0.03).abs() <= 0.005, "flip frequency {freq}");
    }

    #[test]
    fn feature_probability_examples() {
        let pop = Population::generate(&PopulationConfig::default()).unwrap();
        let c0 = pop.center(0).unwrap();
        // 0.97^7 evaluated directly
        assert!((pop.feature_probability(0, &c0).unwrap() - 0.807_982_844_781_129_8).abs() < 1e-12);
        let total: f64 = FeatureElement::all(7).unwrap().map(|x| pop.feature_probability(0, &x).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let noiseless = Population::generate(&PopulationConfig { p: 0.0, ..Default::default() }).unwrap();
        assert_eq!(noiseless.feature_probability(3, &noiseless.center(3).unwrap()).unwrap(), 1.0);
        assert!(pop.feature_probability(0, &fe("01")).is_err());
    }

    #[test]
    fn ball_probability_matches_enumeration() {
        let pop = Population::generate(&PopulationConfig { p: 0.1, ..Default::default() }).unwrap();
        let x = fe("1010101");
        for radius in 0..=7 {
            let brute: f64 = FeatureElement::all(7)
                .unwrap()
                .filter(|y| hamming_distance(&x, y).unwrap() <= radius)
                .map(|y| pop.feature_probability(2, &y).unwrap())
                .sum();
            let closed = pop.ball_probability(2, &x, radius).unwrap();
            assert!((brute - closed).abs() < 1e-12, "radius {radius}: {brute} vs {closed}");
        }
    }

    fn overlap_by_midpoint_search(x0: &FeatureElement, x1: &FeatureElement, tau: u32) -> bool {
        FeatureElement::all(x0.len()).unwrap().any(|z| hamming_distance(x0, &z).unwrap() <= tau && hamming_distance(x1, &z).unwrap() <= tau)
    }

    #[test]
    fn overlap_examples() {
        let x0 = fe("0000000");
        assert!(!neighborhood_overlap(&x0, &fe("1000000"), 0).unwrap());
        let d4 = fe("1111000");
        let d5 = fe("1111100");
        assert!(overlap_by_midpoint_search(&x0, &d4, 2));
        assert!(neighborhood_overlap(&x0, &d4, 2).unwrap());
        assert!(!overlap_by_midpoint_search(&x0, &d5, 2));
        assert!(!neighborhood_overlap(&x0, &d5, 2).unwrap());
    }

    #[test]
    fn overlap_equals_midpoint_search_exhaustively() {
        for n in [1usize, 4, 6] {
            for a in FeatureElement::all(n).unwrap() {
                for b in FeatureElement::all(n).unwrap() {
                    for tau in 0..=(n as u32) {
                        assert_eq!(neighborhood_overlap(&a, &b, tau).unwrap(), overlap_by_midpoint_search(&a, &b, tau));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn semimetric_axioms(a in 0u64..1 << 20, b in 0u64..1 << 20) {
            let (x, y) = (FeatureElement::new(a, 20).unwrap(), FeatureElement::new(b, 20).unwrap());
            let d = hamming_distance(&x, &y).unwrap();
            prop_assert_eq!(d == 0, x == y);
            prop_assert_eq!(d, hamming_distance(&y, &x).unwrap());
        }

        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), u in 0usize..16) {
            let pop = Population::generate(&PopulationConfig::default()).unwrap();
            let draw = || {
                let mut rng = SeedSpace::new(seed).rng(0, Role::AdversaryOracle);
                let mut oracle = SamplingOracle::new(&pop, 10, &mut rng);
                (0..10).map(|_| oracle.sample(u).unwrap()).collect::<Vec<_>>()
            };
            prop_assert_eq!(draw(), draw());
        }
    }
}
