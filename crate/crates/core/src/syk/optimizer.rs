//! Maximizing `|tr(τ H)|` over pure Gaussian states `τ`.
//!
//! States are parameterized by an orthogonal `O` acting on the reference
//! matching covariance, `Σ = O Σ₀ Oᵀ`. Ascent moves along `O ← exp(ηX) O`
//! with `X = [Σ, G]`, where `G` is the gradient of the energy in `Σ`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{pfaffian, CovarianceMatrix};
use crate::hamiltonian::LocalHamiltonian;
use crate::majorana::Phase;
use crate::rng::stream_rng;
use crate::sampler::with_pool;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptConfig {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Relative slack used when certifying against the best value.
    pub slack: f64,
    pub workers: usize,
    /// Stop a run when `‖X‖_F` falls below this.
    pub grad_tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig { iterations: 300, restarts: 8, seed: 0, slack: 1e-9, workers: 0, grad_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    /// Best `|tr(τ H)|` found.
    pub best: f64,
    pub covariance: CovarianceMatrix,
    /// Running best after each iteration, runs concatenated in restart order.
    pub history: Vec<f64>,
    /// Per-run objective values (nondecreasing within a run).
    pub runs: Vec<Vec<f64>>,
}

/// `Σ₀` pairing `(2k, 2k+1)` with sign `+`.
pub fn reference_covariance(n_modes: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

struct Term {
    idx: Vec<usize>,
    weight: f64,
}

fn terms_of(h: &LocalHamiltonian) -> Result<Vec<Term>> {
    h.terms()
        .iter()
        .map(|t| {
            let m = t.string.weight() / 2;
            let ph = (t.string.phase() * Phase::from_exponent(-(m as i64))).to_complex();
            if ph.im != 0.0 {
                return Err(Error::Invalid("non-Hermitian term in energy functional".into()));
            }
            Ok(Term { idx: t.support().to_vec(), weight: t.coeff * ph.re })
        })
        .collect()
}

fn sub(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

fn energy_of(terms: &[Term], cov: &DMatrix<f64>) -> f64 {
    terms.iter().map(|t| t.weight * pfaffian(&sub(cov, &t.idx))).sum()
}

/// Gradient with respect to the independent entries `Σ_{kl}`, `k < l`,
/// stored antisymmetrically.
fn gradient_of(terms: &[Term], cov: &DMatrix<f64>) -> DMatrix<f64> {
    let m = cov.nrows();
    let mut g = DMatrix::zeros(m, m);
    for t in terms {
        let s = sub(cov, &t.idx);
        let k = t.idx.len();
        for i in 0..k {
            for j in i + 1..k {
                let rest: Vec<usize> = (0..k).filter(|&x| x != i && x != j).collect();
                let sign = if (i + j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                let d = t.weight * sign * pfaffian(&sub(&s, &rest));
                g[(t.idx[i], t.idx[j])] += d;
                g[(t.idx[j], t.idx[i])] -= d;
            }
        }
    }
    g
}

/// `tr(τ H)` for the Gaussian state with covariance `cov`.
pub fn gaussian_energy(h: &LocalHamiltonian, cov: &CovarianceMatrix) -> Result<f64> {
    Ok(energy_of(&terms_of(h)?, &cov.0))
}

fn haar_orthogonal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

struct RunOutcome {
    value: f64,
    cov: DMatrix<f64>,
    trace: Vec<f64>,
}

fn ascend(terms: &[Term], o0: DMatrix<f64>, sigma0: &DMatrix<f64>, sign: f64, cfg: &OptConfig) -> RunOutcome {
    let mut o = o0;
    let mut cov = &o * sigma0 * o.transpose();
    let mut f = sign * energy_of(terms, &cov);
    let mut trace = vec![f];
    let mut eta = 0.1;
    for _ in 0..cfg.iterations {
        let g = gradient_of(terms, &cov) * sign;
        let x = &cov * &g - &g * &cov;
        let xn2 = x.norm_squared();
        if xn2.sqrt() < cfg.grad_tol {
            break;
        }
        // Directional derivative along exp(ηX) is ½‖X‖².
        let slope = 0.5 * xn2;
        eta *= 2.0;
        let mut moved = false;
        for _ in 0..60 {
            let rot = (&x * eta).exp();
            let o_new = &rot * &o;
            let cov_new = &o_new * sigma0 * o_new.transpose();
            let f_new = sign * energy_of(terms, &cov_new);
            if f_new >= f + 1e-4 * eta * slope {
                o = o_new;
                cov = cov_new;
                f = f_new;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        trace.push(f);
        if !moved {
            break;
        }
    }
    RunOutcome { value: f, cov, trace }
}

/// Best `|tr(τ H)|` over pure Gaussian states, by Riemannian ascent with
/// restarts. Restart 0 starts from the reference state.
pub fn gaussian_energy_opt(h: &LocalHamiltonian, cfg: &OptConfig) -> Result<OptResult> {
    let terms = terms_of(h)?;
    let m = h.n_majoranas();
    let sigma0 = reference_covariance(h.n_modes());
    if terms.is_empty() {
        return Ok(OptResult { best: 0.0, covariance: CovarianceMatrix(sigma0), history: vec![0.0], runs: vec![vec![0.0]] });
    }
    let restarts = cfg.restarts.max(1);
    let outcomes: Vec<(RunOutcome, RunOutcome)> = with_pool(cfg.workers, || {
        (0..restarts as u64)
            .into_par_iter()
            .map(|r| {
                let o0 = if r == 0 { DMatrix::identity(m, m) } else { haar_orthogonal(m, &mut stream_rng(cfg.seed, r)) };
                let up = ascend(&terms, o0.clone(), &sigma0, 1.0, cfg);
                let down = ascend(&terms, o0, &sigma0, -1.0, cfg);
                (up, down)
            })
            .collect()
    });
    let mut best = f64::NEG_INFINITY;
    let mut best_cov = sigma0.clone();
    let mut history = Vec::new();
    let mut runs = Vec::new();
    for (up, down) in outcomes {
        for run in [up, down] {
            for &v in &run.trace {
                best = best.max(v);
                history.push(best);
            }
            if run.value >= best {
                best_cov = run.cov.clone();
            }
            runs.push(run.trace);
        }
    }
    Ok(OptResult { best, covariance: CovarianceMatrix(best_cov), history, runs })
}

/// `max_τ |tr(τ H)|` for a quadratic `H`: half the sum of singular values of
/// the antisymmetric coupling matrix.
pub fn quadratic_optimum(h: &LocalHamiltonian) -> Result<f64> {
    let terms = terms_of(h)?;
    let m = h.n_majoranas();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for t in &terms {
        if t.idx.len() != 2 {
            return Err(Error::Invalid("quadratic_optimum needs a quadratic Hamiltonian".into()));
        }
        a[(t.idx[0], t.idx[1])] += t.weight;
        a[(t.idx[1], t.idx[0])] -= t.weight;
    }
    Ok(0.5 * a.singular_values().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianFactor;
    use crate::sites::SiteSet;

    #[test]
    fn zero_hamiltonian() {
        let h = LocalHamiltonian::new(3, vec![], false).unwrap();
        assert_eq!(gaussian_energy_opt(&h, &OptConfig::default()).unwrap().best, 0.0);
    }

    #[test]
    fn reference_energy_matches_expect() {
        let h = LocalHamiltonian::new(
            3,
            vec![
                (SiteSet::from_indices([0, 1]), 0.7),
                (SiteSet::from_indices([2, 3]), -0.2),
                (SiteSet::from_indices([0, 1, 2, 3]), 0.5),
                (SiteSet::from_indices([1, 2]), 0.9),
            ],
            false,
        )
        .unwrap();
        let mut g = GaussianFactor::identity(3);
        for k in 0..3 {
            g.pin_pair(2 * k, 2 * k + 1, 1).unwrap();
        }
        let want: f64 = h.terms().iter().map(|t| t.coeff * g.expect(&t.string).re).sum();
        let cov = CovarianceMatrix(reference_covariance(3));
        assert_eq!(cov, g.covariance());
        assert!((gaussian_energy(&h, &cov).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let h = crate::syk::syk_generate(3, 4, 5).unwrap().hamiltonian(crate::syk::Normalization::None).unwrap();
        let terms = terms_of(&h).unwrap();
        let mut rng = stream_rng(2, 0);
        let o = haar_orthogonal(6, &mut rng);
        let cov = &o * reference_covariance(3) * o.transpose();
        let g = gradient_of(&terms, &cov);
        let eps = 1e-6;
        for (k, l) in [(0, 1), (1, 4), (2, 5)] {
            let mut p = cov.clone();
            p[(k, l)] += eps;
            p[(l, k)] -= eps;
            let mut m = cov.clone();
            m[(k, l)] -= eps;
            m[(l, k)] += eps;
            let fd = (energy_of(&terms, &p) - energy_of(&terms, &m)) / (2.0 * eps);
            assert!((fd - g[(k, l)]).abs() < 1e-6, "({k},{l}): {fd} vs {}", g[(k, l)]);
        }
    }

    #[test]
    fn history_is_monotone() {
        let h = crate::syk::syk_generate(3, 4, 9).unwrap().hamiltonian(crate::syk::Normalization::None).unwrap();
        let r = gaussian_energy_opt(&h, &OptConfig { iterations: 50, restarts: 3, ..Default::default() }).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        for run in &r.runs {
            assert!(run.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
