//! Sampling fermionic Gibbs states at high temperature as mixtures of
//! Gaussian states.
//!
//! The crate is organised bottom-up:
//! - [`majorana`]: Majorana strings and their algebra.
//! - [`hamiltonian`]: local Hamiltonians, restriction and temperature thresholds.
//! - [`expansion`]: series expansion of the two-sided update operator.
//! - [`gaussian`]: pinned Gaussian factors, covariances, Wick's theorem.
//! - [`sampler`]: the pinning process and the Gibbs sampler built on it.
//! - [`oracle`]: dense Jordan-Wigner reference implementation for small systems.
//! - [`syk`]: SYK instances and the Gaussian-separation experiment.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expansion;
pub mod gaussian;
pub mod hamiltonian;
pub mod io;
pub mod majorana;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod sites;
pub mod stats;
pub mod syk;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, GaussianFactor, SignedPair};
pub use hamiltonian::{HamiltonianTerm, LocalHamiltonian};
pub use majorana::{MajoranaString, Phase};
pub use sites::SiteSet;
