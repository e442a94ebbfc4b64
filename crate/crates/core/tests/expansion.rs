use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;

use fermi_gibbs_core::expansion::{
    expand_coefficients, sample_mu, sample_update_operator, PathStep, UpdateContext, UpdateParams,
};
use fermi_gibbs_core::hamiltonian::generators;
use fermi_gibbs_core::oracle::{self, DenseOperator, StringSum};
use fermi_gibbs_core::rng::stream_rng;
use fermi_gibbs_core::{LocalHamiltonian, MajoranaString, SiteSet};

fn setup(seed: u64) -> (LocalHamiltonian, SiteSet, SiteSet, f64) {
    let mut rng = stream_rng(seed, 0);
    let h = generators::random_local(3, 4, 5, (0.3, 1.0), None, &mut rng).unwrap();
    let full = h.full_sites();
    let mut next = full;
    next.remove(rng.random_range(0..6));
    let beta = h.beta_thresholds().0;
    (h, full, next, beta)
}

#[test]
fn mu_path_frequencies_match_analytic_probabilities() {
    let (h, prev, next, beta) = setup(11);
    let ctx = UpdateContext::new(&h, prev, next, beta).unwrap();
    for t in 1..=3u32 {
        let analytic: HashMap<Vec<PathStep>, f64> = expand_coefficients(&ctx, t, 1_000_000)
            .unwrap()
            .into_iter()
            .filter(|e| e.degree == t)
            .map(|e| (e.path, e.mu_prob))
            .collect();
        let n = 100_000;
        let mut counts: HashMap<Vec<PathStep>, usize> = HashMap::new();
        let mut rng = stream_rng(12, t as u64);
        for _ in 0..n {
            *counts.entry(sample_mu(&ctx, t, &mut rng).path).or_default() += 1;
        }
        let covered: f64 = analytic.values().sum();
        let mut outside = 0usize;
        for (path, k) in &counts {
            match analytic.get(path) {
                Some(&p) => {
                    let f = *k as f64 / n as f64;
                    let tol = 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1.0 / n as f64;
                    assert!((f - p).abs() <= tol, "degree {t}: path {path:?} frequency {f} vs {p}");
                }
                None => outside += k,
            }
        }
        // Paths that die early (no candidates) carry the remaining probability mass.
        let rest = (1.0 - covered).max(0.0);
        let f_out = outside as f64 / n as f64;
        assert!((f_out - rest).abs() <= 5.0 * (rest * (1.0 - rest) / n as f64).sqrt() + 1e-4);
    }
}

#[test]
fn truncated_sampler_has_renormalized_first_order_mean() {
    let (h, prev, next, beta) = setup(21);
    let ctx = UpdateContext::new(&h, prev, next, beta).unwrap();
    let mut target = StringSum::default();
    target.add(&MajoranaString::identity(), Complex64::new(1.0, 0.0));
    for e in expand_coefficients(&ctx, 1, 1000).unwrap().iter().filter(|e| e.degree == 1) {
        target.add(&e.string, Complex64::new(2.0 * e.coeff, 0.0));
    }
    let target = target.to_dense(3).unwrap();
    let params = UpdateParams { n_param: 24.0, t_max: Some(1) };
    let n = 100_000;
    let mut sum = StringSum::default();
    let mut rng = stream_rng(22, 0);
    let mut accepted = 0usize;
    for _ in 0..n {
        let u = sample_update_operator(&ctx, params, &mut rng).unwrap();
        assert!(u.degree <= 1);
        sum.add(&MajoranaString::identity(), Complex64::new(1.0 / n as f64, 0.0));
        if !u.is_identity {
            accepted += 1;
            sum.add(&u.op, Complex64::new(u.scale / n as f64, 0.0));
        }
    }
    let mean = sum.to_dense(3).unwrap();
    // Each accepted draw moves the mean by scale / n; a binomial bound on the count suffices.
    let scale = (24.0 * h.locality() as f64).recip();
    let err = mean.sub(&target).operator_norm();
    let signal = target.sub(&DenseOperator::identity(3).unwrap()).operator_norm();
    assert!(accepted > 0);
    assert!(err <= 5.0 * scale * (accepted as f64).sqrt() / n as f64 + 1e-12, "err {err} signal {signal}");
}

#[test]
fn one_step_conjugation_identity() {
    // M† e^{-β H^{S_next}} M = e^{-β H^{S_prev}}.
    let (h, prev, next, beta) = setup(31);
    let m = oracle::update_operator_dense(&h, &prev, &next, beta).unwrap();
    let lhs = m.adjoint().mul(&oracle::gibbs_unnormalized(&h.restrict(&next), beta).unwrap()).mul(&m);
    let rhs = oracle::gibbs_unnormalized(&h.restrict(&prev), beta).unwrap();
    assert!(lhs.sub(&rhs).operator_norm() < 1e-12);
}

#[test]
fn sampled_update_decisions_identify_draws() {
    let (h, prev, next, beta) = setup(41);
    let ctx = UpdateContext::new(&h, prev, next, beta).unwrap();
    let params = UpdateParams { n_param: 24.0, t_max: None };
    let mut rng = stream_rng(42, 0);
    let mut seen: HashMap<Vec<String>, (bool, MajoranaString)> = HashMap::new();
    for _ in 0..5000 {
        let u = sample_update_operator(&ctx, params, &mut rng).unwrap();
        assert!(u.log_prob <= 0.0);
        let key: Vec<String> = u.decisions.iter().map(|d| format!("{d:?}")).collect();
        let value = (u.is_identity, u.op);
        if let Some(prev) = seen.insert(key, value) {
            assert_eq!(prev, value);
        }
    }
}
