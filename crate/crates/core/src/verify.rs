//! Oracle-equivalence checks between the symbolic modules and dense
//! Jordan-Wigner matrices, plus random generators shared with the tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::expansion::{degree_sums, expand_coefficients, UpdateContext, DEFAULT_TERM_CAP};
use crate::gaussian::{pfaffian, wick_expect, GaussianFactor};
use crate::hamiltonian::{generators, LocalHamiltonian};
use crate::majorana::{MajoranaString, Phase};
use crate::oracle::{self, DenseOperator, JordanWigner, StringSum};
use crate::rng::stream_rng;
use crate::sites::SiteSet;

/// Random generators for tests.
pub mod random {
    use super::*;

    /// Uniform support over `m` indices (even weight if `even`) and a uniform phase.
    pub fn string<R: Rng + ?Sized>(m: usize, even: bool, rng: &mut R) -> MajoranaString {
        loop {
            let s = SiteSet::from_indices((0..m).filter(|_| rng.random::<bool>()));
            if !even || s.len().is_multiple_of(2) {
                return MajoranaString::new(s, Phase::from_exponent(rng.random_range(0..4)));
            }
        }
    }

    /// Random signed partial matching with `λ ∈ (0, 2)`.
    pub fn factor<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> GaussianFactor {
        let mut g = GaussianFactor::identity(n_modes);
        let mut idx: Vec<usize> = (0..2 * n_modes).collect();
        rand::seq::SliceRandom::shuffle(&mut idx[..], rng);
        let pairs = rng.random_range(0..=n_modes);
        for p in 0..pairs {
            let (a, b) = (idx[2 * p], idx[2 * p + 1]);
            let sign = if rng.random::<bool>() { 1 } else { -1 };
            g.pin_pair(a.min(b), a.max(b), sign).unwrap();
        }
        g.scale(rng.random_range(0.01..2.0)).unwrap();
        g
    }

    /// All quadratic terms with standard-normal couplings (not sampler-eligible).
    pub fn quadratic<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> LocalHamiltonian {
        let m = 2 * n_modes;
        let mut terms = Vec::new();
        for k in 0..m {
            for l in k + 1..m {
                terms.push((SiteSet::from_indices([k, l]), rng.sample::<f64, _>(rand_distr::StandardNormal)));
            }
        }
        LocalHamiltonian::new(n_modes, terms, false).unwrap()
    }

    /// A random sampler-eligible Hamiltonian mixing 2- and 4-local terms.
    pub fn mixed<R: Rng + ?Sized>(n_modes: usize, n_terms: usize, max_degree: usize, rng: &mut R) -> LocalHamiltonian {
        let m = 2 * n_modes;
        let mut supports: Vec<SiteSet> = Vec::new();
        let mut tries = 0;
        while supports.len() < n_terms && tries < 200 {
            tries += 1;
            let k = if rng.random::<bool>() { 2 } else { 4.min(m) };
            let s = SiteSet::from_indices(rand::seq::index::sample(rng, m, k));
            if supports.contains(&s) {
                continue;
            }
            supports.push(s);
            let d = supports.iter().map(|a| supports.iter().filter(|b| !a.is_disjoint(b)).count()).max().unwrap();
            if d > max_degree {
                supports.pop();
            }
        }
        let terms = supports.into_iter().map(|s| (s, rng.random_range(0.0..=1.0))).collect();
        LocalHamiltonian::new(n_modes, terms, true).unwrap()
    }

    /// `S_prev` a random subset containing a random removed index.
    pub fn site_pair<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (SiteSet, SiteSet) {
        let mut prev = SiteSet::from_indices((0..m).filter(|_| rng.random_range(0.0..1.0) < 0.7));
        let v = rng.random_range(0..m);
        prev.insert(v);
        let mut next = prev;
        next.remove(v);
        (prev, next)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
}

fn max_entry(a: &DenseOperator) -> f64 {
    a.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn outcome(name: &str, max_error: f64, tolerance: f64, cases: usize) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed: max_error <= tolerance, max_error, tolerance, cases }
}

/// Runs every check and returns one outcome per check.
pub fn run_oracle_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut rng = stream_rng(seed, 0);

    let n = 4;
    let mut err = 0.0f64;
    for _ in 0..200 {
        let a = random::string(2 * n, true, &mut rng);
        let b = random::string(2 * n, true, &mut rng);
        let lhs = (a * b).jw_dense(n)?;
        let rhs = a.jw_dense(n)?.mul(&b.jw_dense(n)?);
        err = err.max(max_entry(&lhs.sub(&rhs)));
    }
    out.push(outcome("string product homomorphism (2n=8)", err, 1e-12, 200));

    let mut err = 0.0f64;
    for _ in 0..100 {
        let a = random::string(2 * n, false, &mut rng);
        err = err.max(max_entry(&a.adjoint().jw_dense(n)?.sub(&a.jw_dense(n)?.adjoint())));
        let tr = a.jw_dense(n)?.trace() / 16.0;
        err = err.max((tr - a.normalized_trace()).norm());
    }
    out.push(outcome("adjoint and trace (2n=8)", err, 1e-12, 100));

    let all: Vec<MajoranaString> = (0u32..64)
        .filter(|m| m.count_ones() % 2 == 0)
        .map(|m| MajoranaString::new(SiteSet::from_indices((0..6).filter(|i| m >> i & 1 == 1)), Phase::ONE))
        .collect();
    let mut bad = 0usize;
    for a in &all {
        for b in &all {
            if a.commutes(b) != (*a * *b == *b * *a) {
                bad += 1;
            }
        }
    }
    out.push(outcome("commutation rule exhaustive (2n=6)", bad as f64, 0.0, all.len() * all.len()));

    let mut err = 0.0f64;
    for _ in 0..20 {
        let h = generators::random_local(4, 4, 6, (0.0, 1.0), None, &mut rng)?;
        let s = SiteSet::from_indices((0..8).filter(|_| rng.random::<bool>()));
        let restricted = h.restrict(&s).jw_dense(4)?;
        let mut sum = StringSum::default();
        for t in h.terms().iter().filter(|t| t.support().is_subset(&s)) {
            sum.add(&t.string, Complex64::new(t.coeff, 0.0));
        }
        err = err.max(max_entry(&restricted.sub(&sum.to_dense(4)?)));
    }
    out.push(outcome("restriction (2n=8)", err, 1e-12, 20));

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..5 {
        let h = random::mixed(3, 5, 4, &mut rng);
        let (prev, next) = random::site_pair(6, &mut rng);
        let c = 50.0 * h.locality() as f64;
        let beta = 1.0 / (2.0 * c * h.degree() as f64);
        let ctx = UpdateContext::new(&h, prev, next, beta)?;
        let terms = expand_coefficients(&ctx, 4, DEFAULT_TERM_CAP)?;
        let mut sum = StringSum::default();
        for e in &terms {
            sum.add(&e.string, Complex64::new(e.coeff, 0.0));
        }
        let exact = oracle::update_operator_dense(&h, &prev, &next, beta)?;
        let tail = c.powi(-4) / (c - 1.0) + 1e-10;
        let e = exact.sub(&sum.to_dense(3)?).operator_norm();
        worst = worst.max(e - tail);
        for (t, s) in degree_sums(&terms, 4).iter().enumerate() {
            worst = worst.max(s - c.powi(-(t as i32)) * (1.0 + 1e-12));
        }
    }
    out.push(outcome("update-operator expansion vs dense (2n=6)", worst.max(0.0), 0.0, 5));

    let mut err = 0.0f64;
    for _ in 0..50 {
        let g = random::factor(4, &mut rng);
        let rho = g.jw_dense(4)?.scaled(Complex64::new(1.0 / g.trace(), 0.0));
        for _ in 0..4 {
            let x = random::string(8, true, &mut rng);
            err = err.max((g.expect(&x) - rho.expect_string(&x)?).norm());
            err = err.max((wick_expect(&g.covariance(), &x) - g.expect(&x)).norm());
        }
        let ev = g.jw_dense(4)?.hermitian_eigenvalues();
        err = err.max(-ev[0]);
        err = err.max((g.jw_dense(4)?.trace().re - g.trace()).abs());
    }
    out.push(outcome("Gaussian factor expectations and PSD (2n=8)", err, 1e-10, 50));

    let mut err = 0.0f64;
    for _ in 0..5 {
        let h2 = random::quadratic(4, &mut rng);
        let rho = oracle::gibbs_exact(&h2, 0.4)?;
        let cov = oracle::covariance_from_dense(&rho)?;
        for _ in 0..10 {
            let x = random::string(8, true, &mut rng);
            err = err.max((wick_expect(&cov, &x) - rho.expect_string(&x)?).norm());
        }
    }
    out.push(outcome("Wick expectations on rotated states (2n=8)", err, 1e-8, 5));

    let mut err = 0.0f64;
    for m in (2..=12).step_by(2) {
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let a = &a - a.transpose();
        let pf = pfaffian(&a);
        let det = a.clone().determinant();
        err = err.max((pf * pf - det).abs() / det.abs().max(1.0));
    }
    out.push(outcome("Pfaffian squared equals determinant", err, 1e-8, 6));

    let beta = 0.3;
    let h = LocalHamiltonian::new(3, vec![(SiteSet::from_indices([0, 1, 2, 3]), 1.0)], true)?;
    let z = oracle::partition_exact(&h, beta)?;
    let want = 4.0 * (beta.exp() + (-beta).exp());
    let z0 = oracle::partition_exact(&h.restrict(&SiteSet::empty()), beta)?;
    out.push(outcome("partition function", ((z - want) / want).abs().max((z0 - 8.0).abs()), 1e-12, 2));

    Ok(out)
}
