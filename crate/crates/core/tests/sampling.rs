use btpgame::rng::{Role, SeedSpace};
use btpgame::{FeatureElement, Population, PopulationConfig, SamplingOracle};

const DRAWS: u64 = 1_000_000;

fn empirical(counts: &[u64], pop: &Population, probability: impl Fn(&FeatureElement) -> f64) {
    for x in FeatureElement::all(pop.n()).unwrap() {
        let p = probability(&x);
        let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
        let freq = counts[x.index()] as f64 / DRAWS as f64;
        assert!((freq - p).abs() <= 4.0 * se + 1e-12, "{x}: frequency {freq}, probability {p}, se {se}");
    }
}

#[test]
fn user_samples_follow_feature_probability() {
    let pop = Population::generate(&PopulationConfig { n: 6, users: 5, p: 0.2, seed: 3, centers: None }).unwrap();
    let mut rng = SeedSpace::new(5).rng(0, Role::AdversaryOracle);
    let mut oracle = SamplingOracle::new(&pop, DRAWS, &mut rng);
    let mut counts = vec![0u64; 1 << pop.n()];
    for _ in 0..DRAWS {
        counts[oracle.sample(2).unwrap().index()] += 1;
    }
    assert_eq!(oracle.queries(), DRAWS);
    empirical(&counts, &pop, |x| pop.feature_probability(2, x).unwrap());
}

#[test]
fn mixture_samples_follow_the_mixture() {
    let pop = Population::generate(&PopulationConfig { n: 8, p: 0.1, ..Default::default() }).unwrap();
    let mut rng = SeedSpace::new(9).single();
    let mut counts = vec![0u64; 1 << pop.n()];
    for _ in 0..DRAWS {
        counts[pop.draw_mixture(&mut rng).index()] += 1;
    }
    empirical(&counts, &pop, |x| pop.mixture_probability(x).unwrap());
}
