//! Special Gaussian states `λ Π (I + s iγ_k γ_l)` and general Gaussian
//! expectations through covariance matrices and Wick's theorem.

mod pfaffian;

pub use pfaffian::{pfaffian, pfaffian_expansion};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorana::{MajoranaString, Phase};
use crate::sites::SiteSet;

/// A pinned pair `(k, l, s)` with `k < l` (0-based), denoting `I + s iγ_k γ_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedPair {
    pub k: usize,
    pub l: usize,
    pub sign: i8,
}

impl SignedPair {
    /// `s iγ_k γ_l`.
    pub fn string(&self) -> MajoranaString {
        let p = MajoranaString::pair(self.k, self.l);
        if self.sign < 0 {
            p.negate()
        } else {
            p
        }
    }
}

/// Unnormalized special Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFactor {
    n_modes: usize,
    lambda: f64,
    pairs: Vec<SignedPair>,
    pinned: SiteSet,
}

impl GaussianFactor {
    pub fn identity(n_modes: usize) -> Self {
        GaussianFactor { n_modes, lambda: 1.0, pairs: Vec::new(), pinned: SiteSet::empty() }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pairs(&self) -> &[SignedPair] {
        &self.pairs
    }

    /// Indices covered by some pair.
    pub fn pinned(&self) -> SiteSet {
        self.pinned
    }

    /// Multiplies by `I + s iγ_k γ_l`. Pinning an already matched index fails.
    pub fn pin_pair(&mut self, k: usize, l: usize, sign: i8) -> Result<()> {
        if k >= l || l >= 2 * self.n_modes {
            return Err(Error::Invalid(format!("bad pair ({}, {})", k + 1, l + 1)));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::Invalid(format!("pair sign {sign} must be ±1")));
        }
        if self.pinned.contains(k) || self.pinned.contains(l) {
            return Err(Error::invariant(format!("index already pinned in pair ({}, {})", k + 1, l + 1)));
        }
        self.pinned.insert(k);
        self.pinned.insert(l);
        self.pairs.push(SignedPair { k, l, sign });
        Ok(())
    }

    /// Multiplies `λ` by a nonnegative factor.
    pub fn scale(&mut self, factor: f64) -> Result<()> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::invariant(format!("negative or invalid scale factor {factor}")));
        }
        self.lambda *= factor;
        Ok(())
    }

    /// `λ 2^n`.
    pub fn trace(&self) -> f64 {
        self.lambda * (self.n_modes as f64).exp2()
    }

    /// `tr(ρ Γ)` for the normalized state `ρ`. Requires `λ > 0`.
    pub fn expect(&self, gamma: &MajoranaString) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if gamma.is_zero() {
            return zero;
        }
        let supp = gamma.support();
        let mut covered = SiteSet::empty();
        let mut prod = MajoranaString::identity();
        for p in &self.pairs {
            match (supp.contains(p.k), supp.contains(p.l)) {
                (true, true) => {
                    covered.insert(p.k);
                    covered.insert(p.l);
                    prod = prod * p.string();
                }
                (false, false) => {}
                _ => return zero,
            }
        }
        if covered != supp {
            return zero;
        }
        (prod * *gamma).normalized_trace()
    }

    /// `Σ_{kl} = i tr(ρ γ_k γ_l)`: `±s` at matched positions, zero elsewhere.
    pub fn covariance(&self) -> CovarianceMatrix {
        let m = 2 * self.n_modes;
        let mut c = DMatrix::zeros(m, m);
        for p in &self.pairs {
            c[(p.k, p.l)] = p.sign as f64;
            c[(p.l, p.k)] = -(p.sign as f64);
        }
        CovarianceMatrix(c)
    }

    pub fn to_row(&self) -> SampleRow {
        SampleRow {
            lambda: self.lambda,
            pairs: self.pairs.iter().map(|p| [p.k as i64 + 1, p.l as i64 + 1, p.sign as i64]).collect(),
            n_modes: self.n_modes,
        }
    }

    pub fn from_row(row: &SampleRow) -> Result<Self> {
        let mut g = GaussianFactor::identity(row.n_modes);
        if !(row.lambda >= 0.0) {
            return Err(Error::Invalid(format!("negative lambda {}", row.lambda)));
        }
        g.lambda = row.lambda;
        for &[k, l, s] in &row.pairs {
            if k < 1 || l < 1 {
                return Err(Error::Invalid(format!("bad pair [{k}, {l}]")));
            }
            g.pin_pair(k as usize - 1, l as usize - 1, s as i8).map_err(|e| Error::Invalid(e.to_string()))?;
        }
        Ok(g)
    }
}

/// JSONL row form of a [`GaussianFactor`] with 1-based indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleRow {
    pub lambda: f64,
    pub pairs: Vec<[i64; 3]>,
    pub n_modes: usize,
}

/// Real antisymmetric covariance matrix with `Σ_{kl} = i tr(ρ γ_k γ_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(pub DMatrix<f64>);

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        (&self.0 + self.0.transpose()).amax() <= tol
    }

    /// Submatrix on the given ascending indices.
    pub fn restrict(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.0[(idx[a], idx[b])])
    }
}

/// `tr(ρ Γ)` for the Gaussian state with covariance `Σ`:
/// `phase · (-i)^m · Pf(Σ_A)` for `Γ = phase · γ_A`, `|A| = 2m`.
/// Odd-weight strings have zero expectation.
pub fn wick_expect(cov: &CovarianceMatrix, gamma: &MajoranaString) -> Complex64 {
    if gamma.is_zero() || !gamma.is_even() {
        return Complex64::new(0.0, 0.0);
    }
    let idx = gamma.support().to_vec();
    let m = idx.len() / 2;
    let pf = pfaffian(&cov.restrict(&idx));
    let phase = gamma.phase() * Phase::from_exponent(-(m as i64));
    phase.to_complex() * pf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> MajoranaString {
        s.parse().unwrap()
    }

    #[test]
    fn pin_and_scale() {
        let mut g = GaussianFactor::identity(3);
        g.pin_pair(0, 1, 1).unwrap();
        g.pin_pair(2, 3, -1).unwrap();
        assert_eq!(g.pairs().len(), 2);
        assert_eq!(g.lambda(), 1.0);
        g.scale(1.0 - 24.0 / 25.0).unwrap();
        assert!((g.lambda() - 1.0 / 25.0).abs() < 1e-15);
        assert!(g.pin_pair(1, 4, 1).unwrap_err().is_assertion());
        assert!(g.scale(-0.5).unwrap_err().is_assertion());
    }

    #[test]
    fn traces() {
        assert_eq!(GaussianFactor::identity(2).trace(), 4.0);
        let mut g = GaussianFactor::identity(2);
        g.pin_pair(0, 1, 1).unwrap();
        assert_eq!(g.trace(), 4.0);
    }

    #[test]
    fn expectations() {
        let mut g = GaussianFactor::identity(2);
        g.pin_pair(0, 1, 1).unwrap();
        assert_eq!(g.expect(&p("+i g1 g2")), Complex64::new(1.0, 0.0));
        assert_eq!(g.expect(&p("+i g1 g3")), Complex64::new(0.0, 0.0));
        assert_eq!(g.expect(&MajoranaString::identity()), Complex64::new(1.0, 0.0));
        let mut h = GaussianFactor::identity(2);
        h.pin_pair(0, 1, -1).unwrap();
        assert_eq!(h.expect(&p("+i g1 g2")), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn wick_agrees_on_matchings() {
        let mut g = GaussianFactor::identity(4);
        g.pin_pair(0, 3, 1).unwrap();
        g.pin_pair(1, 2, -1).unwrap();
        g.pin_pair(4, 7, 1).unwrap();
        let cov = g.covariance();
        assert!(cov.is_antisymmetric(0.0));
        for s in ["+i g1 g4", "+1 g2 g3", "-1 g1 g2 g3 g4", "+i g1 g4 g5 g8", "+1 g1 g2", "+1 g1 g2 g3 g4 g5 g8"] {
            let x = p(s);
            assert!((g.expect(&x) - wick_expect(&cov, &x)).norm() < 1e-12, "{s}");
        }
        assert_eq!(wick_expect(&cov, &p("g1")), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn row_round_trip() {
        let mut g = GaussianFactor::identity(3);
        g.pin_pair(1, 4, -1).unwrap();
        g.scale(0.5).unwrap();
        let row = g.to_row();
        assert_eq!(row.pairs, vec![[2, 5, -1]]);
        assert_eq!(GaussianFactor::from_row(&row).unwrap(), g);
    }
}
