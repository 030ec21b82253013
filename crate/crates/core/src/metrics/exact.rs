//! Exhaustive-enumeration twins of the Monte Carlo estimators.
//!
//! Everything here sums over all `2^n` feature elements and over every
//! outcome of PIE's randomness, so it is restricted to small `n`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MatchRateStats;
use crate::error::{BtpError, Result};
use crate::population::{FeatureElement, Population};
use crate::schemes::{AuxData, BtpScheme, Identifier};

/// Largest feature dimension for which full scans over `M` are attempted.
pub const EXACT_MAX_N: usize = 12;

pub(crate) fn require_exact(n: usize) -> Result<()> {
    if n > EXACT_MAX_N {
        return Err(BtpError::Mode(format!("exact enumeration needs n <= {EXACT_MAX_N}, got {n}")));
    }
    Ok(())
}

/// `(FNMR_{d<=tau}, FMR_{d<=tau})` by summing ball probabilities over all
/// enrolment samples.
pub fn exact_baseline_rates(pop: &Population, tau: u32) -> Result<(f64, f64)> {
    require_exact(pop.n())?;
    let users = pop.users();
    let mut genuine = 0.0;
    let mut impostor = 0.0;
    for x in FeatureElement::all(pop.n())? {
        for u in 0..users {
            let weight = pop.feature_probability(u, &x)?;
            if weight == 0.0 {
                continue;
            }
            genuine += weight * pop.ball_probability(u, &x, tau)?;
            for v in (0..users).filter(|&v| v != u) {
                impostor += weight * pop.ball_probability(v, &x, tau)?;
            }
        }
    }
    let users = users as f64;
    Ok(((1.0 - genuine / users).max(0.0), impostor / (users * (users - 1.0))))
}

#[derive(Debug, Clone)]
struct TemplateClass {
    pi: usize,
    alpha: usize,
    /// `Pr[PIE(X_u) = (pi, alpha)]` per user.
    weights: Vec<f64>,
}

/// Exact joint law of samples, templates and comparator outcomes for one
/// scheme on one population.
///
/// Templates are interned into distinct `(pi, alpha)` classes. PIR outputs
/// are tabulated once per distinct helper value and PIC once per
/// `(pi, identifier)` pair, so every metric reduces to weighted sums.
#[derive(Debug, Clone)]
pub struct ExactModel {
    n: usize,
    users: usize,
    user_probs: Vec<Vec<f64>>,
    mixture: Vec<f64>,
    pis: Vec<Identifier>,
    alphas: Vec<AuxData>,
    ids: Vec<Identifier>,
    /// `alphas.len() x 2^n` indices into `ids`.
    pir_table: Vec<u32>,
    /// `pis.len() x ids.len()` comparator outcomes.
    pic_table: Vec<bool>,
    templates: Vec<TemplateClass>,
    /// Per template, `Pr[PIC accepts X_u]` for every user.
    masses: Vec<Vec<f64>>,
}

fn intern<T: Clone + Eq + std::hash::Hash>(table: &mut Vec<T>, index: &mut HashMap<T, usize>, value: &T) -> usize {
    if let Some(&i) = index.get(value) {
        return i;
    }
    table.push(value.clone());
    index.insert(value.clone(), table.len() - 1);
    table.len() - 1
}

impl ExactModel {
    pub fn new(scheme: &dyn BtpScheme, pop: &Population) -> Result<Self> {
        let n = pop.n();
        require_exact(n)?;
        if scheme.dimension() != n {
            return Err(BtpError::Dimension { expected: n, actual: scheme.dimension() });
        }
        let users = pop.users();
        let space = 1usize << n;
        let user_probs: Vec<Vec<f64>> = (0..users).map(|u| pop.user_distribution(u)).collect::<Result<_>>()?;
        let mixture: Vec<f64> = (0..space).map(|x| user_probs.iter().map(|p| p[x]).sum::<f64>() / users as f64).collect();

        let (mut pis, mut pi_index) = (Vec::new(), HashMap::new());
        let (mut alphas, mut alpha_index) = (Vec::new(), HashMap::new());
        let mut templates: Vec<TemplateClass> = Vec::new();
        let mut template_index: HashMap<(usize, usize), usize> = HashMap::new();
        for x in FeatureElement::all(n)? {
            let xi = x.index();
            for (w, pt) in scheme.pie_outcomes(&x)? {
                let pi = intern(&mut pis, &mut pi_index, &pt.pi);
                let alpha = intern(&mut alphas, &mut alpha_index, &pt.alpha);
                let t = *template_index.entry((pi, alpha)).or_insert_with(|| {
                    templates.push(TemplateClass { pi, alpha, weights: vec![0.0; users] });
                    templates.len() - 1
                });
                for (u, probs) in user_probs.iter().enumerate() {
                    templates[t].weights[u] += w * probs[xi];
                }
            }
        }

        let (mut ids, mut id_index) = (Vec::new(), HashMap::new());
        let mut pir_table = Vec::with_capacity(alphas.len() * space);
        for alpha in &alphas {
            for x in FeatureElement::all(n)? {
                let id = scheme.pir(alpha, &x)?;
                pir_table.push(intern(&mut ids, &mut id_index, &id) as u32);
            }
        }
        let mut pic_table = Vec::with_capacity(pis.len() * ids.len());
        for pi in &pis {
            for id in &ids {
                pic_table.push(scheme.pic(pi, id).is_match());
            }
        }

        let mut model = ExactModel { n, users, user_probs, mixture, pis, alphas, ids, pir_table, pic_table, templates, masses: Vec::new() };
        model.masses = (0..model.templates.len())
            .map(|t| {
                let mut mass = vec![0.0; users];
                for x in 0..space {
                    if model.accepts(t, x) {
                        for (u, m) in mass.iter_mut().enumerate() {
                            *m += model.user_probs[u][x];
                        }
                    }
                }
                mass
            })
            .collect();
        Ok(model)
    }

    fn accepts(&self, template: usize, x: usize) -> bool {
        let t = &self.templates[template];
        let id = self.pir_table[t.alpha * (1 << self.n) + x] as usize;
        self.pic_table[t.pi * self.ids.len() + id]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct `(pi, alpha)` pairs PIE can output.
    pub fn template_classes(&self) -> usize {
        self.templates.len()
    }

    fn template_weight(&self, t: usize) -> f64 {
        self.templates[t].weights.iter().sum::<f64>() / self.users as f64
    }

    fn distinct_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.users).flat_map(move |u| (0..self.users).filter(move |&v| v != u).map(move |v| (u, v)))
    }

    fn pair_count(&self) -> f64 {
        (self.users * (self.users - 1)) as f64
    }

    pub fn fnmr(&self) -> f64 {
        let accepted: f64 =
            (0..self.users).map(|u| self.templates.iter().zip(&self.masses).map(|(t, m)| t.weights[u] * m[u]).sum::<f64>()).sum();
        (1.0 - accepted / self.users as f64).max(0.0)
    }

    /// Impostor `X_u` against a template of `X_v`, `v != u`.
    pub fn fmr_bp(&self) -> f64 {
        let total: f64 = self
            .distinct_pairs()
            .map(|(u, v)| self.templates.iter().zip(&self.masses).map(|(t, m)| t.weights[v] * m[u]).sum::<f64>())
            .sum();
        total / self.pair_count()
    }

    /// `Pr[PIC(pi_c, PIR(alpha_b, x_a)) = match]` with the probe from user
    /// `a`, the helper data from a template of `b` and the reference from an
    /// independent template of `c`.
    fn cross(&self, a: usize, b: usize, c: usize, pi_marginals: &[Vec<f64>], alpha_marginals: &[Vec<f64>]) -> f64 {
        let space = 1 << self.n;
        let ids = self.ids.len();
        let mut accept_id = vec![0.0; ids];
        for (pi, &w) in pi_marginals[c].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (id, acc) in accept_id.iter_mut().enumerate() {
                if self.pic_table[pi * ids + id] {
                    *acc += w;
                }
            }
        }
        let mut total = 0.0;
        for (alpha, &w) in alpha_marginals[b].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = &self.pir_table[alpha * space..(alpha + 1) * space];
            let inner: f64 = row.iter().zip(&self.user_probs[a]).map(|(&id, &p)| p * accept_id[id as usize]).sum();
            total += w * inner;
        }
        total
    }

    fn marginals(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pi_m = vec![vec![0.0; self.pis.len()]; self.users];
        let mut alpha_m = vec![vec![0.0; self.alphas.len()]; self.users];
        for t in &self.templates {
            for u in 0..self.users {
                pi_m[u][t.pi] += t.weights[u];
                alpha_m[u][t.alpha] += t.weights[u];
            }
        }
        (pi_m, alpha_m)
    }

    /// Impostor probe and helper data of `u` against the reference of `v`.
    pub fn fmr_tp_ad(&self) -> f64 {
        let (pi_m, alpha_m) = self.marginals();
        self.distinct_pairs().map(|(u, v)| self.cross(u, u, v, &pi_m, &alpha_m)).sum::<f64>() / self.pair_count()
    }

    /// Probe and reference of `u` combined with the helper data of `v`.
    pub fn fmr_tp_pi(&self) -> f64 {
        let (pi_m, alpha_m) = self.marginals();
        self.distinct_pairs().map(|(u, v)| self.cross(u, v, u, &pi_m, &alpha_m)).sum::<f64>() / self.pair_count()
    }

    /// Old helper data against a freshly generated reference of the same user.
    pub fn fmr_div(&self) -> f64 {
        let (pi_m, alpha_m) = self.marginals();
        (0..self.users).map(|u| self.cross(u, u, u, &pi_m, &alpha_m)).sum::<f64>() / self.users as f64
    }

    /// `rMR(x)`: probability that a template of `X(U)` accepts `x`.
    pub fn rmr(&self, x: &FeatureElement) -> Result<f64> {
        crate::schemes::check_dimension(self.n, x)?;
        Ok(self.rmr_index(x.index()))
    }

    fn rmr_index(&self, x: usize) -> f64 {
        (0..self.templates.len()).filter(|&t| self.accepts(t, x)).map(|t| self.template_weight(t)).sum()
    }

    /// `(m_Pi, argmax)` over all of `M`. Ties go to the smallest index.
    pub fn extremal_rmr(&self) -> (f64, FeatureElement) {
        let space = 1usize << self.n;
        let mut rates = vec![0.0; space];
        for (t, class) in self.templates.iter().enumerate() {
            let w = class.weights.iter().sum::<f64>() / self.users as f64;
            for (x, rate) in rates.iter_mut().enumerate() {
                if self.accepts(t, x) {
                    *rate += w;
                }
            }
        }
        let (best, value) = rates.iter().enumerate().fold((0, f64::MIN), |acc, (x, &r)| if r > acc.1 { (x, r) } else { acc });
        (value, FeatureElement::from_index(best as u64, self.n))
    }

    /// Per-class `(weight, MR_Pi(pi, alpha))` under `PIE(X(U))`.
    pub fn template_rates(&self) -> Vec<(f64, f64)> {
        self.templates
            .iter()
            .zip(&self.masses)
            .map(|(t, m)| (t.weights.iter().sum::<f64>() / self.users as f64, m.iter().sum::<f64>() / self.users as f64))
            .filter(|&(w, _)| w > 0.0)
            .collect()
    }

    /// `MR_Pi`, its population standard deviation and `C`, exactly.
    pub fn match_rate_stats(&self) -> Result<MatchRateStats> {
        let rates = self.template_rates();
        let mean: f64 = rates.iter().map(|(w, r)| w * r).sum();
        let var: f64 = rates.iter().map(|(w, r)| w * (r - mean).powi(2)).sum();
        MatchRateStats::exact(mean, var.max(0.0).sqrt())
    }

    /// Fraction of template mass whose match rate exceeds `threshold`.
    pub fn mass_above(&self, threshold: f64) -> f64 {
        self.template_rates().iter().filter(|(_, r)| *r > threshold).map(|(w, _)| w).sum()
    }

    /// Probability of `x` under `X(U)`, indexed by `x.index()`.
    pub fn mixture(&self) -> &[f64] {
        &self.mixture
    }

    /// Advantage of the appendix-B decider when the scheme accepts every
    /// sample under its own templates: `1 - MR_Pi`.
    pub fn appendix_b_advantage(&self) -> Result<f64> {
        Ok(1.0 - self.match_rate_stats()?.mean)
    }
}

/// Exact value or search result together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    /// Maximum over a candidate set; the true maximum may be larger.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MValue {
    pub value: f64,
    pub witness: FeatureElement,
    pub provenance: Provenance,
}
