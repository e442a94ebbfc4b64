//! Local fermionic Hamiltonians `H = Σ λ_a G_a`.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorana::MajoranaString;
use crate::sites::{SiteSet, CAPACITY};

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub coeff: f64,
    pub string: MajoranaString,
}

impl HamiltonianTerm {
    pub fn support(&self) -> SiteSet {
        self.string.support()
    }
}

/// A Hamiltonian with cached locality `R`, degree `d` and per-index term
/// adjacency. The degree counts each term as overlapping itself.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    n_modes: usize,
    terms: Vec<HamiltonianTerm>,
    locality: usize,
    degree: usize,
    adjacency: Vec<Vec<usize>>,
    sampler_eligible: bool,
}

/// JSON form. Indices are 1-based and strictly increasing; the Hermitizing
/// phase `i^{k/2}` is implied.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HamiltonianDocument {
    pub n_modes: usize,
    #[serde(default = "default_true")]
    pub sampler_eligible: bool,
    pub terms: Vec<TermDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermDocument {
    pub indices: Vec<usize>,
    pub coeff: f64,
}

fn default_true() -> bool {
    true
}

impl LocalHamiltonian {
    /// Builds a Hamiltonian from 0-based supports and coefficients.
    pub fn new(n_modes: usize, terms: Vec<(SiteSet, f64)>, sampler_eligible: bool) -> Result<Self> {
        if 2 * n_modes > CAPACITY {
            return Err(Error::Invalid(format!(
                "{} Majorana modes exceed the build capacity of {CAPACITY}",
                2 * n_modes
            )));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(terms.len());
        for (support, coeff) in terms {
            let k = support.len();
            if k == 0 {
                return Err(Error::Invalid("identity term is not allowed".into()));
            }
            if k % 2 == 1 {
                return Err(Error::Invalid(format!("term {support:?} has odd support")));
            }
            if let Some(m) = support.last() {
                if m >= 2 * n_modes {
                    return Err(Error::IndexOutOfRange { index: m + 1, n_modes });
                }
            }
            if !coeff.is_finite() {
                return Err(Error::Invalid(format!("non-finite coefficient {coeff}")));
            }
            if sampler_eligible && !(0.0..=1.0).contains(&coeff) {
                return Err(Error::Invalid(format!(
                    "coefficient {coeff} outside [0, 1] for a sampler-eligible Hamiltonian"
                )));
            }
            if !seen.insert(support) {
                return Err(Error::Invalid(format!("duplicate term {support:?}")));
            }
            out.push(HamiltonianTerm { coeff, string: MajoranaString::hermitian(support) });
        }
        Ok(Self::from_terms_unchecked(n_modes, out, sampler_eligible))
    }

    fn from_terms_unchecked(n_modes: usize, terms: Vec<HamiltonianTerm>, sampler_eligible: bool) -> Self {
        let mut adjacency = vec![Vec::new(); 2 * n_modes];
        for (a, t) in terms.iter().enumerate() {
            for i in t.support().iter() {
                adjacency[i].push(a);
            }
        }
        let locality = terms.iter().map(|t| t.support().len()).max().unwrap_or(0).max(2);
        let degree = compute_degree(&terms, &adjacency).max(1);
        LocalHamiltonian { n_modes, terms, locality, degree, adjacency, sampler_eligible }
    }

    pub fn from_document(doc: &HamiltonianDocument) -> Result<Self> {
        let mut terms = Vec::with_capacity(doc.terms.len());
        for t in &doc.terms {
            if t.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("indices {:?} not strictly increasing", t.indices)));
            }
            if let Some(&bad) = t.indices.iter().find(|&&i| i == 0 || i > 2 * doc.n_modes) {
                return Err(Error::IndexOutOfRange { index: bad, n_modes: doc.n_modes });
            }
            terms.push((SiteSet::from_indices(t.indices.iter().map(|i| i - 1)), t.coeff));
        }
        Self::new(doc.n_modes, terms, doc.sampler_eligible)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: HamiltonianDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }

    pub fn to_document(&self) -> HamiltonianDocument {
        HamiltonianDocument {
            n_modes: self.n_modes,
            sampler_eligible: self.sampler_eligible,
            terms: self
                .terms
                .iter()
                .map(|t| TermDocument { indices: t.support().iter().map(|i| i + 1).collect(), coeff: t.coeff })
                .collect(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of Majorana indices, 2n.
    pub fn n_majoranas(&self) -> usize {
        2 * self.n_modes
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    pub fn locality(&self) -> usize {
        self.locality
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sampler_eligible(&self) -> bool {
        self.sampler_eligible
    }

    /// Term ids whose support contains Majorana index `i` (0-based).
    pub fn terms_at(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn full_sites(&self) -> SiteSet {
        SiteSet::full(self.n_majoranas())
    }

    /// The terms whose support lies inside `s`.
    pub fn restrict(&self, s: &SiteSet) -> LocalHamiltonian {
        let terms = self.terms.iter().filter(|t| t.support().is_subset(s)).cloned().collect();
        Self::from_terms_unchecked(self.n_modes, terms, self.sampler_eligible)
    }

    /// `(1/(48 R d), 1/(50 R d²))`.
    pub fn beta_thresholds(&self) -> (f64, f64) {
        let r = self.locality as f64;
        let d = self.degree as f64;
        (1.0 / (48.0 * r * d), 1.0 / (50.0 * r * d * d))
    }

    /// Recomputes `R` and `d` from scratch and compares against the cache.
    pub fn check_cache(&self) -> Result<()> {
        let mut adj = vec![Vec::new(); self.n_majoranas()];
        for (a, t) in self.terms.iter().enumerate() {
            for i in t.support().iter() {
                adj[i].push(a);
            }
        }
        let d = compute_degree(&self.terms, &adj).max(1);
        let r = self.terms.iter().map(|t| t.support().len()).max().unwrap_or(0).max(2);
        if d != self.degree || r != self.locality || adj != self.adjacency {
            return Err(Error::invariant("cached locality/degree/adjacency inconsistent"));
        }
        Ok(())
    }

    pub fn require_sampler_eligible(&self) -> Result<()> {
        if self.sampler_eligible {
            Ok(())
        } else {
            Err(Error::NotSamplerEligible("coefficients are not constrained to [0, 1]".into()))
        }
    }
}

fn compute_degree(terms: &[HamiltonianTerm], adjacency: &[Vec<usize>]) -> usize {
    let mut best = 0;
    let mut mark = vec![usize::MAX; terms.len()];
    for (a, t) in terms.iter().enumerate() {
        let mut count = 0;
        for i in t.support().iter() {
            for &b in &adjacency[i] {
                if mark[b] != a {
                    mark[b] = a;
                    count += 1;
                }
            }
        }
        best = best.max(count);
    }
    best
}

/// Simple Hamiltonian generators for tests and the CLI.
pub mod generators {
    use super::*;

    /// Terms on consecutive windows `{s, ..., s+R-1}` with stride `stride`.
    pub fn chain(n_modes: usize, locality: usize, stride: usize, coeff: f64) -> Result<LocalHamiltonian> {
        if locality == 0 || stride == 0 {
            return Err(Error::Invalid("locality and stride must be positive".into()));
        }
        let m = 2 * n_modes;
        let terms = (0..)
            .map(|k| k * stride)
            .take_while(|s| s + locality <= m)
            .map(|s| (SiteSet::from_indices(s..s + locality), coeff))
            .collect();
        LocalHamiltonian::new(n_modes, terms, true)
    }

    /// `n_terms` distinct random supports of size `locality` with coefficients
    /// uniform in `[lo, hi]`. Supports that would push the degree above
    /// `max_degree` are rejected, so fewer terms may be returned.
    pub fn random_local<R: Rng + ?Sized>(
        n_modes: usize,
        locality: usize,
        n_terms: usize,
        coeff_range: (f64, f64),
        max_degree: Option<usize>,
        rng: &mut R,
    ) -> Result<LocalHamiltonian> {
        let m = 2 * n_modes;
        if locality == 0 || locality % 2 == 1 || locality > m {
            return Err(Error::Invalid(format!("locality {locality} invalid for {m} Majoranas")));
        }
        let mut supports: Vec<SiteSet> = Vec::new();
        let mut attempts = 0;
        while supports.len() < n_terms && attempts < 50 * n_terms.max(1) {
            attempts += 1;
            let s = SiteSet::from_indices(sample(rng, m, locality));
            if supports.contains(&s) {
                continue;
            }
            if let Some(dmax) = max_degree {
                supports.push(s);
                let ok = degree_of(&supports) <= dmax;
                if !ok {
                    supports.pop();
                    continue;
                }
            } else {
                supports.push(s);
            }
        }
        let (lo, hi) = coeff_range;
        let terms = supports.into_iter().map(|s| (s, rng.random_range(lo..=hi))).collect();
        LocalHamiltonian::new(n_modes, terms, lo >= 0.0 && hi <= 1.0)
    }

    fn degree_of(supports: &[SiteSet]) -> usize {
        supports
            .iter()
            .map(|a| supports.iter().filter(|b| !a.is_disjoint(b)).count())
            .max()
            .unwrap_or(0)
    }
}
