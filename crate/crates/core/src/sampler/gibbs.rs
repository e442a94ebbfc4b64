//! Sampling normalized Gaussian states whose mixture approximates `ρ_β`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::tree::{DensePartitionOracle, TreeWalker};
use super::{run_trajectory, with_pool, SamplerParams, TOL};
use crate::error::{Error, Result};
use crate::gaussian::GaussianFactor;
use crate::hamiltonian::LocalHamiltonian;
use crate::majorana::MajoranaString;
use crate::rng::stream_rng;
use crate::stats;

/// The constant bounding parent-child ratio drift in the sample tree.
pub const BOUND_GAMMA: f64 = 16000.0;

/// `⌈log₂(1/δ)⌉` with `δ = ε / (16 n (γ + 2))`.
pub fn sampling_t_max(n_modes: usize, epsilon: f64) -> u32 {
    let delta = epsilon / (16.0 * n_modes.max(1) as f64 * (BOUND_GAMMA + 2.0));
    (1.0 / delta).log2().ceil().max(1.0) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Strategy {
    /// Draw leaves of the truncated process and accept with `tr σ / B`.
    Rejection { max_attempts: u64 },
    /// Metropolis walk on the tree, see [`WalkConfig`].
    Walk(WalkConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkConfig {
    pub burn_in: u64,
    pub max_steps: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { burn_in: 2000, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GibbsConfig {
    pub epsilon: f64,
    pub strategy: Strategy,
    /// Replaces the computed degree truncation (testing aid).
    pub t_max_override: Option<u32>,
}

impl GibbsConfig {
    pub fn rejection(epsilon: f64) -> Self {
        GibbsConfig { epsilon, strategy: Strategy::Rejection { max_attempts: 10_000_000 }, t_max_override: None }
    }

    pub fn t_max(&self, n_modes: usize) -> u32 {
        self.t_max_override.unwrap_or_else(|| sampling_t_max(n_modes, self.epsilon))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsSample {
    /// Normalized state (`λ` rescaled so the trace is one).
    pub state: GaussianFactor,
    /// Trajectories drawn (rejection) or walk steps taken.
    pub attempts: u64,
}

fn validate(h: &LocalHamiltonian, beta: f64, config: &GibbsConfig) -> Result<()> {
    h.require_sampler_eligible()?;
    if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
        return Err(Error::Invalid(format!("epsilon {} must lie in (0, 1]", config.epsilon)));
    }
    let (_, bound) = h.beta_thresholds();
    if !(beta >= 0.0) || beta > bound * (1.0 + TOL) {
        return Err(Error::BetaOutOfRange { beta, bound });
    }
    Ok(())
}

fn normalized(mut g: GaussianFactor) -> Result<GaussianFactor> {
    let t = g.trace();
    if !(t > 0.0) {
        return Err(Error::invariant("leaf with zero trace selected"));
    }
    g.scale(1.0 / t)?;
    Ok(g)
}

/// One normalized Gaussian state from the sampler.
pub fn sample_gibbs<R: Rng + ?Sized>(
    h: &LocalHamiltonian,
    beta: f64,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<GibbsSample> {
    validate(h, beta, config)?;
    let params = SamplerParams::sampling(config.t_max(h.n_modes()));
    match config.strategy {
        Strategy::Rejection { max_attempts } => {
            // Every absorption factor lies in [1/25, 49/25] and there are at most 2n.
            let lambda_bound = (49.0f64 / 25.0).powi(h.n_majoranas() as i32);
            for attempt in 1..=max_attempts {
                let leaf = run_trajectory(h, beta, &params, rng)?.leaf;
                let accept = leaf.sigma.lambda() / lambda_bound;
                if accept > 1.0 + TOL {
                    return Err(Error::invariant(format!("rejection ratio {accept} exceeds 1")));
                }
                if rng.random::<f64>() < accept {
                    return Ok(GibbsSample { state: normalized(leaf.sigma)?, attempts: attempt });
                }
            }
            Err(Error::AttemptBudgetExhausted { attempts: max_attempts, acceptance_rate: 0.0 })
        }
        Strategy::Walk(wc) => {
            let oracle = DensePartitionOracle;
            let mut walker = TreeWalker::new(h, beta, params, &oracle)?;
            let leaf = walker.sample_leaf(wc.burn_in, wc.max_steps, rng)?;
            Ok(GibbsSample { state: normalized(leaf.sigma)?, attempts: walker.steps })
        }
    }
}

/// `count` samples on streams `0..count` of `seed`, in stream order, so the
/// result does not depend on `workers`.
pub fn sample_many(
    h: &LocalHamiltonian,
    beta: f64,
    config: &GibbsConfig,
    seed: u64,
    count: usize,
    workers: usize,
) -> Result<Vec<GibbsSample>> {
    validate(h, beta, config)?;
    with_pool(workers, || {
        (0..count as u64)
            .into_par_iter()
            .map(|k| sample_gibbs(h, beta, config, &mut stream_rng(seed, k)))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableEstimate {
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
}

/// Sample means of `tr(ρ_v Γ)` with bootstrap standard errors.
pub fn estimate_observable(
    h: &LocalHamiltonian,
    beta: f64,
    config: &GibbsConfig,
    observables: &[MajoranaString],
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<ObservableEstimate>> {
    for o in observables {
        if !o.is_hermitian() || !o.is_even() || o.is_zero() {
            return Err(Error::Invalid(format!("observable {o} must be a nonzero even Hermitian string")));
        }
        o.check_modes(h.n_modes())?;
    }
    let samples = sample_many(h, beta, config, seed, n_samples, workers)?;
    Ok(estimates_from_samples(&samples, observables, seed))
}

pub(crate) fn estimates_from_samples(
    samples: &[GibbsSample],
    observables: &[MajoranaString],
    seed: u64,
) -> Vec<ObservableEstimate> {
    observables
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let values: Vec<f64> = samples.iter().map(|s| s.state.expect(o).re).collect();
            let mut rng = stream_rng(seed ^ 0xB007_57A9, k as u64);
            ObservableEstimate {
                observable: o.to_string(),
                mean: stats::mean(&values),
                stderr: stats::bootstrap_stderr(&values, 200, &mut rng),
            }
        })
        .collect()
}
