//! Taylor expansion of the update operator
//! `M = e^{β H^{S_next}/2} e^{-β H^{S_prev}/2}` where `S_next = S_prev - {v}`.
//!
//! The degree-t part is a nonnegative combination of Majorana strings built
//! by the recursion `f_t = H^{S_next} f_{t-1} - f_{t-1} H^{S_prev}`, split into
//! commutator terms (T1) and boundary terms (T2).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::majorana::MajoranaString;
use crate::sites::SiteSet;

/// Default cap on the number of terms produced by [`expand_coefficients`].
pub const DEFAULT_TERM_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    /// Left multiplication by a term of `H^{S_next}` anticommuting with Γ.
    Commutator,
    /// Right multiplication by a term containing the removed index.
    Boundary,
}

/// One extension step of an expansion path. `term` is `None` when the chosen
/// branch had no candidates, which ends the path in the zero operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PathStep {
    pub branch: Branch,
    pub term: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTerm {
    pub degree: u32,
    pub coeff: f64,
    pub string: MajoranaString,
    /// Probability that [`sample_mu`] produces exactly this path.
    pub mu_prob: f64,
    pub path: Vec<PathStep>,
}

impl ExpansionTerm {
    fn unit() -> Self {
        ExpansionTerm { degree: 0, coeff: 1.0, string: MajoranaString::identity(), mu_prob: 1.0, path: Vec::new() }
    }
}

/// The data shared by every expansion of one update step.
#[derive(Clone, Debug)]
pub struct UpdateContext<'a> {
    h: &'a LocalHamiltonian,
    s_prev: SiteSet,
    s_next: SiteSet,
    beta: f64,
    boundary: Vec<usize>,
}

impl<'a> UpdateContext<'a> {
    /// `s_next` must equal `s_prev` minus exactly one index.
    pub fn new(h: &'a LocalHamiltonian, s_prev: SiteSet, s_next: SiteSet, beta: f64) -> Result<Self> {
        let removed = s_prev.difference(s_next);
        if !s_next.is_subset(&s_prev) || removed.len() != 1 {
            return Err(Error::Invalid(format!(
                "S_next {s_next:?} must be S_prev {s_prev:?} minus one index"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Invalid(format!("beta {beta} must be finite and nonnegative")));
        }
        let v = removed.first().expect("one removed index");
        let boundary = h
            .terms_at(v)
            .iter()
            .copied()
            .filter(|&a| h.terms()[a].support().is_subset(&s_prev))
            .collect();
        Ok(UpdateContext { h, s_prev, s_next, beta, boundary })
    }

    pub fn hamiltonian(&self) -> &LocalHamiltonian {
        self.h
    }

    pub fn s_prev(&self) -> SiteSet {
        self.s_prev
    }

    pub fn s_next(&self) -> SiteSet {
        self.s_next
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Terms containing the removed index that live inside `S_prev`.
    pub fn boundary_terms(&self) -> &[usize] {
        &self.boundary
    }

    /// Terms inside `S_next` that anticommute with `gamma`, ascending by id.
    pub fn commutator_terms(&self, gamma: &MajoranaString) -> Vec<usize> {
        let mut out = Vec::new();
        for i in gamma.support().iter() {
            for &a in self.h.terms_at(i) {
                let g = &self.h.terms()[a].string;
                if g.support().is_subset(&self.s_next) && !g.commutes(gamma) {
                    out.push(a);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Probability of taking the commutator branch when extending from degree `t`.
    pub fn commutator_branch_prob(&self, t: u32) -> f64 {
        let d = self.h.degree() as f64;
        let td = 2.0 * t as f64 * d;
        td / (td + d + 1.0)
    }

    fn extend(&self, parent: &ExpansionTerm, branch: Branch, term: usize, n_choices: usize, branch_prob: f64) -> ExpansionTerm {
        let t = parent.degree as f64;
        let ht = &self.h.terms()[term];
        let (coeff, string) = match branch {
            Branch::Commutator => (self.beta * ht.coeff * parent.coeff / (t + 1.0), ht.string * parent.string),
            Branch::Boundary => {
                (self.beta * ht.coeff * parent.coeff / (2.0 * (t + 1.0)), (parent.string * ht.string).negate())
            }
        };
        let mut path = parent.path.clone();
        path.push(PathStep { branch, term: Some(term) });
        ExpansionTerm {
            degree: parent.degree + 1,
            coeff,
            string,
            mu_prob: parent.mu_prob * branch_prob / n_choices as f64,
            path,
        }
    }

    fn dead_end(&self, parent: &ExpansionTerm, branch: Branch, branch_prob: f64) -> ExpansionTerm {
        let mut path = parent.path.clone();
        path.push(PathStep { branch, term: None });
        ExpansionTerm {
            degree: parent.degree + 1,
            coeff: 0.0,
            string: MajoranaString::zero(),
            mu_prob: parent.mu_prob * branch_prob,
            path,
        }
    }
}

/// All expansion paths up to degree `t_max`, grouped by degree in order.
/// Paths whose string becomes zero are dropped, since they carry no weight.
pub fn expand_coefficients(ctx: &UpdateContext<'_>, t_max: u32, cap: usize) -> Result<Vec<ExpansionTerm>> {
    let mut out = vec![ExpansionTerm::unit()];
    let mut frontier = vec![ExpansionTerm::unit()];
    for t in 0..t_max {
        let p1 = ctx.commutator_branch_prob(t);
        let nb = ctx.boundary.len();
        let mut requested = out.len();
        let t1s: Vec<Vec<usize>> = frontier.iter().map(|e| ctx.commutator_terms(&e.string)).collect();
        for t1 in &t1s {
            requested += t1.len() + nb;
        }
        if requested > cap {
            return Err(Error::ExpansionTooLarge { requested, cap });
        }
        let mut next = Vec::new();
        for (e, t1) in frontier.iter().zip(&t1s) {
            for &a in t1 {
                next.push(ctx.extend(e, Branch::Commutator, a, t1.len(), p1));
            }
            for &a in &ctx.boundary {
                next.push(ctx.extend(e, Branch::Boundary, a, nb, 1.0 - p1));
            }
        }
        debug_assert!(next.iter().all(|e| e.string.support().is_subset(&ctx.s_prev)));
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// `Σ_j c_{j,t}` for each degree `t = 0..=t_max`.
pub fn degree_sums(terms: &[ExpansionTerm], t_max: u32) -> Vec<f64> {
    let mut sums = vec![0.0; t_max as usize + 1];
    for e in terms {
        if (e.degree as usize) < sums.len() {
            sums[e.degree as usize] += e.coeff;
        }
    }
    sums
}

/// Samples one degree-`t` path from the dominating walk.
pub fn sample_mu<R: Rng + ?Sized>(ctx: &UpdateContext<'_>, t: u32, rng: &mut R) -> ExpansionTerm {
    let mut cur = ExpansionTerm::unit();
    for tp in 0..t {
        let p1 = ctx.commutator_branch_prob(tp);
        let commutator = p1 > 0.0 && rng.random::<f64>() < p1;
        cur = if commutator {
            let t1 = ctx.commutator_terms(&cur.string);
            if t1.is_empty() {
                ctx.dead_end(&cur, Branch::Commutator, p1)
            } else {
                let a = t1[rng.random_range(0..t1.len())];
                ctx.extend(&cur, Branch::Commutator, a, t1.len(), p1)
            }
        } else if ctx.boundary.is_empty() {
            ctx.dead_end(&cur, Branch::Boundary, 1.0 - p1)
        } else {
            let a = ctx.boundary[rng.random_range(0..ctx.boundary.len())];
            ctx.extend(&cur, Branch::Boundary, a, ctx.boundary.len(), 1.0 - p1)
        };
        if cur.string.is_zero() {
            // Pad the remaining degrees so the reported degree is t.
            cur.degree = t;
            break;
        }
    }
    cur
}

/// The operator `I` (identity draw) or `I + scale * op`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledUpdate {
    pub degree: u32,
    pub op: MajoranaString,
    pub scale: f64,
    pub is_identity: bool,
    /// Log-probability of this draw's full decision sequence.
    pub log_prob: f64,
    pub decisions: Vec<UpdateDecision>,
}

impl SampledUpdate {
    pub fn identity() -> Self {
        SampledUpdate {
            degree: 0,
            op: MajoranaString::zero(),
            scale: 1.0,
            is_identity: true,
            log_prob: 0.0,
            decisions: Vec::new(),
        }
    }

    /// Replaces `Λ` by `Λ†`, giving a draw for `M†`.
    pub fn adjoint(mut self) -> Self {
        self.op = self.op.adjoint();
        self
    }
}

/// Decision log entries; together they identify a draw as a tree node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UpdateDecision {
    Degree(u32),
    Step(PathStep),
    Accept(bool),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateParams {
    /// The constant N; the walk dominates with `C = 2 N R`.
    pub n_param: f64,
    /// Truncation threshold for the degree, `None` for the exact sampler.
    pub t_max: Option<u32>,
}

/// Draws `I + (NR)^{-t} Λ` whose expectation is the update operator (exactly
/// when `t_max` is `None`, conditioned on `t ≤ t_max` otherwise).
pub fn sample_update_operator<R: Rng + ?Sized>(
    ctx: &UpdateContext<'_>,
    params: UpdateParams,
    rng: &mut R,
) -> Result<SampledUpdate> {
    if params.n_param < 2.0 {
        return Err(Error::Invalid(format!("N = {} must be at least 2", params.n_param)));
    }
    if params.t_max == Some(0) {
        return Err(Error::Invalid("t_max must be at least 1".into()));
    }
    let r = ctx.h.locality() as f64;
    let big_c = 2.0 * params.n_param * r;
    let t = loop {
        let mut t = 1u32;
        while rng.random::<bool>() {
            t += 1;
        }
        match params.t_max {
            Some(m) if t > m => continue,
            _ => break t,
        }
    };
    let mut log_prob = -(t as f64) * std::f64::consts::LN_2;
    if let Some(m) = params.t_max {
        log_prob -= (1.0 - 0.5f64.powi(m as i32)).ln();
    }
    let term = sample_mu(ctx, t, rng);
    log_prob += term.mu_prob.ln();
    let ratio = if term.coeff == 0.0 { 0.0 } else { term.coeff * big_c.powi(t as i32) / term.mu_prob };
    if ratio > 1.0 + 1e-12 {
        return Err(Error::invariant(format!(
            "μ-domination violated: acceptance ratio {ratio} > 1 at degree {t}"
        )));
    }
    let ratio = ratio.min(1.0);
    let accept = ratio > 0.0 && rng.random::<f64>() < ratio;
    let mut decisions = Vec::with_capacity(term.path.len() + 2);
    decisions.push(UpdateDecision::Degree(t));
    decisions.extend(term.path.iter().map(|s| UpdateDecision::Step(*s)));
    decisions.push(UpdateDecision::Accept(accept));
    if accept {
        log_prob += ratio.ln();
        debug_assert!(term.string.support().len() <= ctx.h.locality() * t as usize);
        Ok(SampledUpdate {
            degree: t,
            op: term.string,
            scale: (params.n_param * r).powi(-(t as i32)),
            is_identity: false,
            log_prob,
            decisions,
        })
    } else {
        log_prob += (1.0 - ratio).ln();
        Ok(SampledUpdate { log_prob, decisions, ..SampledUpdate::identity() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn single_term() -> LocalHamiltonian {
        LocalHamiltonian::new(4, vec![(SiteSet::from_indices([0, 1, 2, 3]), 0.7)], true).unwrap()
    }

    #[test]
    fn degree_zero_is_identity() {
        let h = single_term();
        let full = h.full_sites();
        let mut next = full;
        next.remove(0);
        let ctx = UpdateContext::new(&h, full, next, 0.01).unwrap();
        let e = expand_coefficients(&ctx, 0, 10).unwrap();
        assert_eq!(e, vec![ExpansionTerm::unit()]);
        let mut rng = stream_rng(1, 0);
        let s = sample_mu(&ctx, 0, &mut rng);
        assert_eq!((s.coeff, s.mu_prob, s.string), (1.0, 1.0, MajoranaString::identity()));
    }

    #[test]
    fn single_term_degree_one() {
        let h = single_term();
        let full = h.full_sites();
        let mut next = full;
        next.remove(0);
        let beta = 0.01;
        let ctx = UpdateContext::new(&h, full, next, beta).unwrap();
        let e = expand_coefficients(&ctx, 1, 10).unwrap();
        assert_eq!(e.len(), 2);
        let g = h.terms()[0].string;
        assert!((e[1].coeff - beta * 0.7 / 2.0).abs() < 1e-15);
        assert_eq!(e[1].string, (MajoranaString::identity() * g).negate());
        let mut rng = stream_rng(2, 0);
        let s = sample_mu(&ctx, 1, &mut rng);
        assert_eq!(s.path, vec![PathStep { branch: Branch::Boundary, term: Some(0) }]);
        assert_eq!(s.mu_prob, 1.0);
    }

    #[test]
    fn cap_is_enforced() {
        let h = crate::hamiltonian::generators::chain(4, 2, 1, 0.5).unwrap();
        let full = h.full_sites();
        let mut next = full;
        next.remove(3);
        let ctx = UpdateContext::new(&h, full, next, 0.01).unwrap();
        assert!(matches!(expand_coefficients(&ctx, 8, 50), Err(Error::ExpansionTooLarge { .. })));
    }

    #[test]
    fn empty_hamiltonian_always_identity() {
        let h = LocalHamiltonian::new(3, vec![], true).unwrap();
        let full = h.full_sites();
        let mut next = full;
        next.remove(2);
        let ctx = UpdateContext::new(&h, full, next, 0.01).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let u = sample_update_operator(&ctx, UpdateParams { n_param: 24.0, t_max: None }, &mut rng).unwrap();
            assert!(u.is_identity);
        }
    }

    #[test]
    fn bad_context_rejected() {
        let h = single_term();
        let full = h.full_sites();
        assert!(UpdateContext::new(&h, full, full, 0.1).is_err());
    }
}
