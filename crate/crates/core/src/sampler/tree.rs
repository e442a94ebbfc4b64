//! Nodes of the sample tree: ratio estimates and a Metropolis walk over
//! path prefixes.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;

use super::{pin_step, PinningState, SamplerParams};
use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::oracle::{self, JordanWigner};
use crate::sites::SiteSet;

/// Source of `tr e^{-β H}` with a declared relative precision.
pub trait PartitionOracle: Sync {
    fn partition(&self, h: &LocalHamiltonian, beta: f64) -> Result<f64>;
    fn relative_precision(&self) -> f64;
}

/// Dense eigendecomposition; exact to rounding.
#[derive(Clone, Copy, Debug, Default)]
pub struct DensePartitionOracle;

impl PartitionOracle for DensePartitionOracle {
    fn partition(&self, h: &LocalHamiltonian, beta: f64) -> Result<f64> {
        oracle::partition_exact(h, beta)
    }

    fn relative_precision(&self) -> f64 {
        1e-10
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeNodeStats {
    /// Probability of the node's decision path.
    pub p_hat: f64,
    pub trace_sigma: f64,
    /// Estimate of `q̂_v / p̂_v`.
    pub ratio_estimate: f64,
    /// Declared multiplicative error of `ratio_estimate`.
    pub declared_error: f64,
}

/// `tr(σ_v) · Z(H^{S_v}) / 2^n`, which is exact at leaves and at the root.
pub fn ratio_estimate(
    node: &PinningState,
    h: &LocalHamiltonian,
    beta: f64,
    oracle: &dyn PartitionOracle,
) -> Result<TreeNodeStats> {
    let z = oracle.partition(&h.restrict(&node.active), beta)?;
    Ok(stats_from_z(node, h, z, oracle.relative_precision()))
}

fn stats_from_z(node: &PinningState, h: &LocalHamiltonian, z: f64, eps_z: f64) -> TreeNodeStats {
    let trace_sigma = node.sigma.trace();
    TreeNodeStats {
        p_hat: node.log_p.exp(),
        trace_sigma,
        ratio_estimate: trace_sigma * z / (h.n_modes() as f64).exp2(),
        declared_error: 25.0 * (1.0 + eps_z),
    }
}

/// Exact `tr(σ_v e^{-β H^{S_v}} (I + α_v Γ_v))` via dense matrices.
pub fn dense_node_ratio(node: &PinningState, h: &LocalHamiltonian, beta: f64) -> Result<f64> {
    let n = h.n_modes();
    let sigma = node.sigma.jw_dense(n)?;
    let e = oracle::gibbs_unnormalized(&h.restrict(&node.active), beta)?;
    let mut corr = oracle::DenseOperator::identity(n)?;
    if !node.gamma.is_zero() {
        corr = corr.add(&node.gamma.jw_dense(n)?.scaled(Complex64::new(node.alpha, 0.0)));
    }
    Ok(sigma.mul(&e).mul(&corr).trace().re)
}

/// Lazy Metropolis walk on path prefixes whose stationary law restricted to
/// leaves is proportional to `p̂_v tr(σ_v)`.
pub struct TreeWalker<'a> {
    h: &'a LocalHamiltonian,
    beta: f64,
    params: SamplerParams,
    oracle: &'a dyn PartitionOracle,
    z_cache: HashMap<SiteSet, f64>,
    stack: Vec<(PinningState, f64)>,
    pub steps: u64,
    pub accepted: u64,
}

impl<'a> TreeWalker<'a> {
    pub fn new(h: &'a LocalHamiltonian, beta: f64, params: SamplerParams, oracle: &'a dyn PartitionOracle) -> Result<Self> {
        let mut w = TreeWalker { h, beta, params, oracle, z_cache: HashMap::new(), stack: Vec::new(), steps: 0, accepted: 0 };
        let root = PinningState::root(h);
        let r = w.ratio(&root)?;
        w.stack.push((root, r));
        Ok(w)
    }

    fn ratio(&mut self, node: &PinningState) -> Result<f64> {
        let z = match self.z_cache.get(&node.active) {
            Some(&z) => z,
            None => {
                let z = self.oracle.partition(&self.h.restrict(&node.active), self.beta)?;
                self.z_cache.insert(node.active, z);
                z
            }
        };
        Ok(stats_from_z(node, self.h, z, 0.0).ratio_estimate)
    }

    pub fn current(&self) -> &PinningState {
        &self.stack.last().expect("walker stack is never empty").0
    }

    pub fn depth(&self) -> usize {
        self.stack.len() - 1
    }

    /// One lazy step: stay with probability 1/2, else propose down or up.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.steps += 1;
        if rng.random::<bool>() {
            return Ok(());
        }
        let (cur, r_cur) = self.stack.last().cloned().expect("nonempty");
        if rng.random::<bool>() {
            if cur.is_leaf() {
                return Ok(());
            }
            let child = pin_step(&cur, self.h, self.beta, &self.params, rng)?;
            let r_child = self.ratio(&child)?;
            if r_cur <= 0.0 || rng.random::<f64>() < (r_child / r_cur).min(1.0) {
                self.stack.push((child, r_child));
                self.accepted += 1;
            }
        } else if self.stack.len() > 1 {
            let r_parent = self.stack[self.stack.len() - 2].1;
            if r_cur <= 0.0 || rng.random::<f64>() < (r_parent / r_cur).min(1.0) {
                self.stack.pop();
                self.accepted += 1;
            }
        }
        Ok(())
    }

    /// Walks for at least `burn_in` steps and returns the next leaf visited.
    pub fn sample_leaf<R: Rng + ?Sized>(&mut self, burn_in: u64, max_steps: u64, rng: &mut R) -> Result<PinningState> {
        let start = self.steps;
        loop {
            let walked = self.steps - start;
            if walked >= burn_in && self.current().is_leaf() {
                return Ok(self.current().clone());
            }
            if walked >= max_steps {
                return Err(Error::WalkNonConvergence { steps: walked });
            }
            self.step(rng)?;
        }
    }
}
