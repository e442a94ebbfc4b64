use fermi_gibbs_core::oracle::{self, JordanWigner};
use fermi_gibbs_core::rng::stream_rng;
use fermi_gibbs_core::sampler::{
    dense_node_ratio, estimate_observable, pin_step, ratio_estimate, run_structural_many, DensePartitionOracle,
    GibbsConfig, PinningState, SamplerParams, Strategy, TreeWalker, WalkConfig,
};
use fermi_gibbs_core::stats;
use fermi_gibbs_core::verify::random;
use fermi_gibbs_core::{LocalHamiltonian, MajoranaString, SiteSet};

fn two_term() -> LocalHamiltonian {
    LocalHamiltonian::new(
        4,
        vec![(SiteSet::from_indices([0, 1, 2, 3]), 0.8), (SiteSet::from_indices([2, 3, 4, 5]), 0.6)],
        true,
    )
    .unwrap()
}

#[test]
fn structural_mean_matches_term_expectations() {
    // First-order content of e^{-βH}: tr(e^{-βH} Γ_a) for each term string.
    let h = two_term();
    let beta = h.beta_thresholds().0;
    let samples = run_structural_many(&h, beta, 5, 40_000, 0).unwrap();
    let exact = oracle::gibbs_unnormalized(&h, beta).unwrap();
    let z = exact.trace().re;
    for term in h.terms() {
        let obs = term.string;
        let target = exact.expect_string(&obs).unwrap().re / z;
        let values: Vec<f64> = samples.iter().map(|g| g.trace() * g.expect(&obs).re / z).collect();
        let mean = stats::mean(&values);
        let se = stats::std_dev(&values) / (values.len() as f64).sqrt();
        assert!(target.abs() > 1e-4, "signal too small to test: {target}");
        assert!((mean - target).abs() <= 5.0 * se + 1e-12, "{obs}: {mean} vs {target} (se {se})");
    }
}

#[test]
fn rejection_estimates_match_dense_expectations() {
    let mut rng = stream_rng(6, 0);
    let h = random::mixed(3, 4, 3, &mut rng);
    let beta = h.beta_thresholds().1;
    let observables: Vec<MajoranaString> = h.terms().iter().map(|t| t.string).collect();
    let n = 20_000;
    let est = estimate_observable(&h, beta, &GibbsConfig::rejection(0.1), &observables, n, 7, 0).unwrap();
    let rho = oracle::gibbs_exact(&h, beta).unwrap();
    for (e, o) in est.iter().zip(&observables) {
        let exact = rho.expect_string(o).unwrap().re;
        // Per-sample values are 0 or ±1; a Poisson floor covers counts too small for the bootstrap.
        let floor = 5.0 * (exact.abs() / n as f64).sqrt() + 5.0 / n as f64;
        assert!((e.mean - exact).abs() <= 5.0 * e.stderr + floor, "{}: {} vs {exact}", e.observable, e.mean);
    }
}

#[test]
fn estimates_flip_sign_with_observable_sign() {
    let h = two_term();
    let beta = h.beta_thresholds().1;
    let obs = h.terms()[0].string;
    let cfg = GibbsConfig::rejection(0.1);
    let a = estimate_observable(&h, beta, &cfg, &[obs], 2000, 3, 0).unwrap();
    let b = estimate_observable(&h, beta, &cfg, &[obs.negate()], 2000, 3, 0).unwrap();
    assert_eq!(a[0].mean, -b[0].mean);
    assert_eq!(a[0].stderr, b[0].stderr);
}

#[test]
fn ratio_estimate_brackets_dense_ratio() {
    let mut rng = stream_rng(8, 0);
    let h = random::mixed(3, 5, 3, &mut rng);
    let beta = h.beta_thresholds().1;
    let params = SamplerParams::sampling(8);
    let mut state = PinningState::root(&h);
    while !state.is_leaf() {
        let exact = dense_node_ratio(&state, &h, beta).unwrap();
        let est = ratio_estimate(&state, &h, beta, &DensePartitionOracle).unwrap();
        assert!(exact > 0.0);
        assert!(exact / est.ratio_estimate <= 25.0 && est.ratio_estimate / exact <= 25.0);
        state = pin_step(&state, &h, beta, &params, &mut rng).unwrap();
    }
}

#[test]
fn walk_strategy_reaches_leaves_and_estimates() {
    let h = two_term();
    let beta = h.beta_thresholds().1;
    let oracle = DensePartitionOracle;
    let mut walker = TreeWalker::new(&h, beta, SamplerParams::sampling(8), &oracle).unwrap();
    let mut rng = stream_rng(9, 0);
    let leaf = walker.sample_leaf(200, 100_000, &mut rng).unwrap();
    assert!(leaf.is_leaf());
    leaf.sigma.jw_dense(4).unwrap();

    let obs = h.terms()[0].string;
    let cfg = GibbsConfig {
        epsilon: 0.1,
        strategy: Strategy::Walk(WalkConfig { burn_in: 200, max_steps: 100_000 }),
        t_max_override: Some(8),
    };
    let est = estimate_observable(&h, beta, &cfg, &[obs], 3000, 10, 0).unwrap();
    let exact = oracle::gibbs_exact(&h, beta).unwrap().expect_string(&obs).unwrap().re;
    // The walk's own error is not reflected in the stderr, so allow a loose margin.
    assert!((est[0].mean - exact).abs() <= 5.0 * est[0].stderr + 0.02, "{} vs {exact}", est[0].mean);
}
