//! The pinning process: each step removes one site from the active set and
//! either updates the floating string Γ or pins a pair into the Gaussian
//! factor, so that the expected final factor is `e^{-βH}`.

mod gibbs;
mod tree;

pub use gibbs::{
    estimate_observable, sample_gibbs, sample_many, sampling_t_max, GibbsConfig, GibbsSample, ObservableEstimate,
    Strategy, WalkConfig, BOUND_GAMMA,
};
pub use tree::{
    dense_node_ratio, ratio_estimate, DensePartitionOracle, PartitionOracle, TreeNodeStats, TreeWalker,
};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{sample_update_operator, SampledUpdate, UpdateContext, UpdateDecision, UpdateParams};
use crate::gaussian::GaussianFactor;
use crate::hamiltonian::LocalHamiltonian;
use crate::majorana::{MajoranaString, Phase};
use crate::rng::stream_rng;
use crate::sites::SiteSet;

/// Relative slack on numeric invariant checks.
const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerParams {
    /// The constant N (24 structural, 25 sampling).
    pub n_param: f64,
    /// Degree truncation, `None` for the exact structural process.
    pub t_max: Option<u32>,
    /// Extra cap on α checked every step (24/25 in sampling mode).
    pub alpha_cap: Option<f64>,
    /// Keep the per-step decision log in [`PinningState::path`].
    pub record_path: bool,
}

impl SamplerParams {
    pub fn structural() -> Self {
        SamplerParams { n_param: 24.0, t_max: None, alpha_cap: None, record_path: false }
    }

    pub fn sampling(t_max: u32) -> Self {
        SamplerParams { n_param: 25.0, t_max: Some(t_max), alpha_cap: Some(24.0 / 25.0), record_path: false }
    }

    pub fn with_path(mut self) -> Self {
        self.record_path = true;
        self
    }

    /// `1 / (2 N R d)`.
    pub fn beta_bound(&self, h: &LocalHamiltonian) -> f64 {
        1.0 / (2.0 * self.n_param * h.locality() as f64 * h.degree() as f64)
    }
}

/// Which of the seven update branches a step took.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UpdateBranch {
    Keep,
    Left,
    Right,
    LeftGamma,
    GammaRight,
    LeftRight,
    LeftGammaRight,
}

const SIX_BRANCHES: [UpdateBranch; 6] = [
    UpdateBranch::Left,
    UpdateBranch::Right,
    UpdateBranch::LeftGamma,
    UpdateBranch::GammaRight,
    UpdateBranch::LeftRight,
    UpdateBranch::LeftGammaRight,
];

/// Decisions made in one step; the sequence of records identifies a tree node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct StepRecord {
    pub site: usize,
    pub left: Vec<UpdateDecision>,
    pub right: Vec<UpdateDecision>,
    pub branch: UpdateBranch,
    /// Coin flip of a pinning event, `true` for the `+` sign.
    pub coin: Option<bool>,
}

/// One trajectory of the process after `j` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct PinningState {
    pub j: usize,
    pub active: SiteSet,
    pub sigma: GaussianFactor,
    pub gamma: MajoranaString,
    pub alpha: f64,
    /// Log-probability of the decisions taken so far.
    pub log_p: f64,
    pub path: Vec<StepRecord>,
}

impl PinningState {
    pub fn root(h: &LocalHamiltonian) -> Self {
        PinningState {
            j: 0,
            active: h.full_sites(),
            sigma: GaussianFactor::identity(h.n_modes()),
            gamma: MajoranaString::zero(),
            alpha: 0.0,
            log_p: 0.0,
            path: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.active.is_empty()
    }

    /// Checks the per-step invariants against the given parameters.
    pub fn check_invariants(&self, h: &LocalHamiltonian, params: &SamplerParams) -> Result<()> {
        let t = self.gamma.support();
        let pinned = self.sigma.pinned();
        if !self.active.union(t).is_disjoint(&pinned) {
            return Err(Error::invariant(format!("step {}: active/floating sites overlap pinned pairs", self.j)));
        }
        let b = t.difference(self.active).len();
        if b > 1 {
            return Err(Error::invariant(format!("step {}: {b} floating indices outside the active set", self.j)));
        }
        if !(self.gamma.is_zero() || self.gamma.is_hermitian()) {
            return Err(Error::invariant(format!("step {}: floating string {} not Hermitian", self.j, self.gamma)));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invariant(format!("step {}: α = {} is negative", self.j, self.alpha)));
        }
        let r = h.locality() as f64;
        let bound = 24.0 / params.n_param * (1.0 - 1.0 / r).powi((t.len() - b) as i32);
        if self.alpha > bound * (1.0 + TOL) {
            return Err(Error::invariant(format!("step {}: α = {} exceeds bound {bound}", self.j, self.alpha)));
        }
        if let Some(cap) = params.alpha_cap {
            if self.alpha > cap * (1.0 + TOL) {
                return Err(Error::invariant(format!("step {}: α = {} exceeds cap {cap}", self.j, self.alpha)));
            }
        }
        Ok(())
    }
}

/// Advances `state` by one step.
pub fn pin_step<R: Rng + ?Sized>(
    state: &PinningState,
    h: &LocalHamiltonian,
    beta: f64,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<PinningState> {
    let bound = params.beta_bound(h);
    if beta > bound * (1.0 + TOL) {
        return Err(Error::BetaOutOfRange { beta, bound });
    }
    let s = state.active;
    let site = state
        .gamma
        .support()
        .intersection(s)
        .first()
        .or_else(|| s.first())
        .ok_or_else(|| Error::Invalid("pin_step called on a leaf".into()))?;
    let mut s_next = s;
    s_next.remove(site);

    let ctx = UpdateContext::new(h, s, s_next, beta)?;
    let up = UpdateParams { n_param: params.n_param, t_max: params.t_max };
    let u1 = sample_update_operator(&ctx, up, rng)?;
    let u2 = sample_update_operator(&ctx, up, rng)?.adjoint();

    let r = h.locality() as f64;
    let keep_prob = 1.0 - 1.0 / r;
    let mut log_p = state.log_p + u1.log_prob + u2.log_prob;
    let (branch, mut gamma, mut alpha) = if rng.random::<f64>() < keep_prob {
        log_p += keep_prob.ln();
        (UpdateBranch::Keep, state.gamma, state.alpha / keep_prob)
    } else {
        log_p += (1.0 / (6.0 * r)).ln();
        let branch = SIX_BRANCHES[rng.random_range(0..6)];
        let (g, a) = six_way(branch, &u1, &state.gamma, state.alpha, &u2, r);
        (branch, g, a)
    };

    if gamma.is_zero() || !gamma.is_hermitian() {
        gamma = MajoranaString::zero();
        alpha = 0.0;
    }

    let mut sigma = state.sigma.clone();
    let mut coin = None;
    let outside = gamma.support().difference(s_next);
    if outside.len() > 2 {
        return Err(Error::invariant(format!("step {}: {} floating indices left the active set", state.j, outside.len())));
    }
    if outside.len() == 2 {
        let k = outside.first().unwrap();
        let l = outside.last().unwrap();
        let reduced = gamma * MajoranaString::pair(k, l);
        let plus = rng.random::<bool>();
        log_p += 0.5f64.ln();
        if plus {
            gamma = reduced;
            sigma.pin_pair(k, l, 1)?;
        } else {
            gamma = reduced.negate();
            sigma.pin_pair(k, l, -1)?;
        }
        coin = Some(plus);
    }

    if gamma.is_identity_like() {
        let sign = if gamma.phase() == Phase::ONE { 1.0 } else { -1.0 };
        let factor = 1.0 + alpha * sign;
        if factor < -TOL {
            return Err(Error::invariant(format!("step {}: absorption factor {factor} < 0", state.j)));
        }
        sigma.scale(factor.max(0.0))?;
        gamma = MajoranaString::zero();
        alpha = 0.0;
    }

    let mut path = Vec::new();
    if params.record_path {
        path = state.path.clone();
        path.push(StepRecord { site, left: u1.decisions, right: u2.decisions, branch, coin });
    }
    let next = PinningState { j: state.j + 1, active: s_next, sigma, gamma, alpha, log_p, path };
    next.check_invariants(h, params)?;
    Ok(next)
}

/// `(Γ', α')` for one of the six correction branches, each taken with
/// probability `1/(6R)` and weighted by `6R`.
fn six_way(
    branch: UpdateBranch,
    u1: &SampledUpdate,
    gamma: &MajoranaString,
    alpha: f64,
    u2: &SampledUpdate,
    r: f64,
) -> (MajoranaString, f64) {
    let w = 6.0 * r;
    let (l1, b1) = (u1.op, u1.scale);
    let (l2, b2) = (u2.op, u2.scale);
    match branch {
        UpdateBranch::Left => (l1, w * b1),
        UpdateBranch::Right => (l2, w * b2),
        UpdateBranch::LeftGamma => (l1 * *gamma, w * b1 * alpha),
        UpdateBranch::GammaRight => (*gamma * l2, w * alpha * b2),
        UpdateBranch::LeftRight => (l1 * l2, w * b1 * b2),
        UpdateBranch::LeftGammaRight => (l1 * *gamma * l2, w * b1 * alpha * b2),
        UpdateBranch::Keep => unreachable!("keep branch handled by caller"),
    }
}

/// Summary counters of one trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub absorptions: usize,
    pub pins: usize,
    pub max_alpha: f64,
    pub min_absorption_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub leaf: PinningState,
    pub stats: TrajectoryStats,
}

/// Runs all `2n` steps from the root and checks the terminal conditions.
pub fn run_trajectory<R: Rng + ?Sized>(
    h: &LocalHamiltonian,
    beta: f64,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut state = PinningState::root(h);
    let mut stats = TrajectoryStats { min_absorption_factor: f64::INFINITY, ..Default::default() };
    while !state.is_leaf() {
        let lambda_before = state.sigma.lambda();
        let pins_before = state.sigma.pairs().len();
        state = pin_step(&state, h, beta, params, rng)?;
        stats.max_alpha = stats.max_alpha.max(state.alpha);
        stats.pins += state.sigma.pairs().len() - pins_before;
        if state.sigma.lambda() != lambda_before {
            stats.absorptions += 1;
            if lambda_before > 0.0 {
                stats.min_absorption_factor = stats.min_absorption_factor.min(state.sigma.lambda() / lambda_before);
            }
        }
    }
    if !state.gamma.is_zero() {
        return Err(Error::invariant("floating string nonzero at the leaf"));
    }
    if !(state.sigma.trace() >= 0.0) {
        return Err(Error::invariant("negative trace at the leaf"));
    }
    Ok(Trajectory { leaf: state, stats })
}

/// One draw of the structural process: `E[σ] = e^{-βH}`.
pub fn run_structural<R: Rng + ?Sized>(h: &LocalHamiltonian, beta: f64, rng: &mut R) -> Result<GaussianFactor> {
    h.require_sampler_eligible()?;
    let params = SamplerParams::structural();
    let bound = params.beta_bound(h);
    if !(beta >= 0.0) || beta > bound * (1.0 + TOL) {
        return Err(Error::BetaOutOfRange { beta, bound });
    }
    Ok(run_trajectory(h, beta, &params, rng)?.leaf.sigma)
}

/// `count` structural draws on streams `0..count` of `seed`, in stream order.
pub fn run_structural_many(
    h: &LocalHamiltonian,
    beta: f64,
    seed: u64,
    count: usize,
    workers: usize,
) -> Result<Vec<GaussianFactor>> {
    with_pool(workers, || {
        (0..count as u64)
            .into_par_iter()
            .map(|k| run_structural(h, beta, &mut stream_rng(seed, k)))
            .collect()
    })
}

/// Runs `f` on a rayon pool with `workers` threads (0 = rayon default).
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
