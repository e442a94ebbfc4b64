//! Dense Jordan-Wigner reference implementation for small systems.
//!
//! `γ_{2j}` (0-based even) is `Z...Z X_j` and `γ_{2j+1}` is `Z...Z Y_j`; qubit 0
//! is the most significant bit of a basis index.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianFactor};
use crate::hamiltonian::LocalHamiltonian;
use crate::majorana::MajoranaString;
use crate::sites::SiteSet;

pub type CMatrix = DMatrix<Complex64>;

/// Default dense cap: 8 modes, i.e. matrices of dimension 256.
pub const DEFAULT_DENSE_CAP: usize = 8;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

/// Sets the maximum number of modes `n` for dense operators.
pub fn set_dense_cap(n_modes: usize) {
    DENSE_CAP.store(n_modes, Ordering::Relaxed);
}

pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

fn check_cap(n_modes: usize) -> Result<()> {
    let cap = dense_cap();
    if n_modes > cap {
        Err(Error::DenseCapExceeded { n_modes, cap })
    } else {
        Ok(())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A dense operator on `n_modes` fermionic modes (dimension `2^n`).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub n_modes: usize,
    pub matrix: CMatrix,
}

impl DenseOperator {
    pub fn zeros(n_modes: usize) -> Result<Self> {
        check_cap(n_modes)?;
        let dim = 1usize << n_modes;
        Ok(DenseOperator { n_modes, matrix: CMatrix::zeros(dim, dim) })
    }

    pub fn identity(n_modes: usize) -> Result<Self> {
        check_cap(n_modes)?;
        let dim = 1usize << n_modes;
        Ok(DenseOperator { n_modes, matrix: CMatrix::identity(dim, dim) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator { n_modes: self.n_modes, matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_modes: self.n_modes, matrix: &self.matrix * &other.matrix }
    }

    pub fn scaled(&self, s: Complex64) -> DenseOperator {
        DenseOperator { n_modes: self.n_modes, matrix: &self.matrix * s }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_modes: self.n_modes, matrix: &self.matrix - &other.matrix }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_modes: self.n_modes, matrix: &self.matrix + &other.matrix }
    }

    /// `‖A - A†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.matrix.clone().singular_values().iter().copied().collect()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.singular_values().into_iter().fold(0.0, f64::max)
    }

    /// Sum of singular values.
    pub fn schatten1(&self) -> f64 {
        self.singular_values().into_iter().sum()
    }

    /// `tr(self · Γ)`, using the monomial structure of `Γ`.
    pub fn expect_string(&self, gamma: &MajoranaString) -> Result<Complex64> {
        if gamma.is_zero() {
            return Ok(c(0.0));
        }
        let mono = Monomial::of_string(gamma, self.n_modes)?;
        let mut acc = c(0.0);
        for col in 0..self.dim() {
            acc += self.matrix[(col, mono.rows[col])] * mono.vals[col];
        }
        Ok(acc)
    }
}

/// Signed-phase permutation matrix: column `c` maps to row `rows[c]` with `vals[c]`.
#[derive(Clone, Debug)]
struct Monomial {
    rows: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Monomial {
    fn identity(n: usize) -> Self {
        let dim = 1usize << n;
        Monomial { rows: (0..dim).collect(), vals: vec![c(1.0); dim] }
    }

    fn gamma(m: usize, n: usize) -> Self {
        let q = m / 2;
        let bit = 1usize << (n - 1 - q);
        let prefix_mask = if q == 0 { 0 } else { ((1usize << q) - 1) << (n - q) };
        let dim = 1usize << n;
        let mut rows = Vec::with_capacity(dim);
        let mut vals = Vec::with_capacity(dim);
        for col in 0..dim {
            let z = if (col & prefix_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let v = if m.is_multiple_of(2) {
                c(z)
            } else if col & bit == 0 {
                Complex64::new(0.0, z)
            } else {
                Complex64::new(0.0, -z)
            };
            rows.push(col ^ bit);
            vals.push(v);
        }
        Monomial { rows, vals }
    }

    /// `self · other`.
    fn compose(&self, other: &Monomial) -> Monomial {
        let rows = other.rows.iter().map(|&r| self.rows[r]).collect();
        let vals = other.rows.iter().zip(&other.vals).map(|(&r, &v)| self.vals[r] * v).collect();
        Monomial { rows, vals }
    }

    fn of_string(s: &MajoranaString, n: usize) -> Result<Self> {
        check_cap(n)?;
        s.check_modes(n)?;
        let mut m = Monomial::identity(n);
        for i in s.support().iter() {
            m = m.compose(&Monomial::gamma(i, n));
        }
        let ph = s.phase().to_complex();
        for v in &mut m.vals {
            *v *= ph;
        }
        Ok(m)
    }

    fn add_into(&self, target: &mut CMatrix, coeff: Complex64) {
        for (col, (&r, &v)) in self.rows.iter().zip(&self.vals).enumerate() {
            target[(r, col)] += v * coeff;
        }
    }
}

/// Types with a faithful dense Jordan-Wigner image.
pub trait JordanWigner {
    fn jw_dense(&self, n_modes: usize) -> Result<DenseOperator>;
}

impl JordanWigner for MajoranaString {
    fn jw_dense(&self, n_modes: usize) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(n_modes)?;
        if !self.is_zero() {
            Monomial::of_string(self, n_modes)?.add_into(&mut out.matrix, c(1.0));
        }
        Ok(out)
    }
}

impl JordanWigner for LocalHamiltonian {
    fn jw_dense(&self, n_modes: usize) -> Result<DenseOperator> {
        let mut sum = StringSum::default();
        for t in self.terms() {
            sum.add(&t.string, c(t.coeff));
        }
        sum.to_dense(n_modes)
    }
}

impl JordanWigner for GaussianFactor {
    fn jw_dense(&self, n_modes: usize) -> Result<DenseOperator> {
        let mut sum = StringSum::default();
        sum.add_factor(self, 1.0);
        sum.to_dense(n_modes)
    }
}

/// A linear combination of Majorana strings, keyed by support.
#[derive(Clone, Debug, Default)]
pub struct StringSum {
    coeffs: HashMap<SiteSet, Complex64>,
}

impl StringSum {
    pub fn add(&mut self, s: &MajoranaString, coeff: Complex64) {
        if s.is_zero() {
            return;
        }
        *self.coeffs.entry(s.support()).or_insert(c(0.0)) += coeff * s.phase().to_complex();
    }

    /// Adds `weight · λ Π (I + s iγ_k γ_l)` expanded into strings.
    pub fn add_factor(&mut self, g: &GaussianFactor, weight: f64) {
        let pairs = g.pairs();
        let scale = c(weight * g.lambda());
        for mask in 0u64..(1u64 << pairs.len()) {
            let mut s = MajoranaString::identity();
            for (b, p) in pairs.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    s = s * p.string();
                }
            }
            self.add(&s, scale);
        }
    }

    pub fn add_scaled(&mut self, other: &StringSum, weight: f64) {
        for (k, v) in &other.coeffs {
            *self.coeffs.entry(*k).or_insert(c(0.0)) += v * weight;
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Normalized trace, i.e. the identity coefficient.
    pub fn normalized_trace(&self) -> Complex64 {
        self.coeffs.get(&SiteSet::empty()).copied().unwrap_or(c(0.0))
    }

    pub fn to_dense(&self, n_modes: usize) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(n_modes)?;
        let mut keys: Vec<_> = self.coeffs.keys().copied().collect();
        keys.sort();
        for k in keys {
            let s = MajoranaString::new(k, crate::majorana::Phase::ONE);
            Monomial::of_string(&s, n_modes)?.add_into(&mut out.matrix, self.coeffs[&k]);
        }
        Ok(out)
    }
}

/// `e^{t A}` for Hermitian `A` via eigendecomposition.
pub fn expm_hermitian(a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    if !a.is_finite() {
        return Err(Error::Invalid("non-finite matrix entries".into()));
    }
    let h = (&a.matrix + a.matrix.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(h);
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c((t * x).exp())));
    let v = eig.eigenvectors;
    Ok(DenseOperator { n_modes: a.n_modes, matrix: &v * d * v.adjoint() })
}

/// `e^{A}` for a general matrix (scaling and squaring).
pub fn expm(a: &DenseOperator) -> Result<DenseOperator> {
    if !a.is_finite() {
        return Err(Error::Invalid("non-finite matrix entries".into()));
    }
    Ok(DenseOperator { n_modes: a.n_modes, matrix: a.matrix.exp() })
}

/// `ρ_β = e^{-βH} / tr e^{-βH}`.
pub fn gibbs_exact(h: &LocalHamiltonian, beta: f64) -> Result<DenseOperator> {
    let e = expm_hermitian(&h.jw_dense(h.n_modes())?, -beta)?;
    let z = e.trace().re;
    Ok(e.scaled(c(1.0 / z)))
}

/// `e^{-βH}` unnormalized.
pub fn gibbs_unnormalized(h: &LocalHamiltonian, beta: f64) -> Result<DenseOperator> {
    expm_hermitian(&h.jw_dense(h.n_modes())?, -beta)
}

/// `tr e^{-βH}` from the spectrum.
pub fn partition_exact(h: &LocalHamiltonian, beta: f64) -> Result<f64> {
    if h.terms().is_empty() {
        return Ok((h.n_modes() as f64).exp2());
    }
    let ev = h.jw_dense(h.n_modes())?.hermitian_eigenvalues();
    Ok(ev.iter().map(|x| (-beta * x).exp()).sum())
}

/// `½ ‖A - B‖₁`.
pub fn trace_distance(a: &DenseOperator, b: &DenseOperator) -> f64 {
    0.5 * a.sub(b).schatten1()
}

/// The update operator `e^{β H^{S_next}/2} e^{-β H^{S_prev}/2}`.
pub fn update_operator_dense(h: &LocalHamiltonian, s_prev: &SiteSet, s_next: &SiteSet, beta: f64) -> Result<DenseOperator> {
    let n = h.n_modes();
    let a = expm_hermitian(&h.restrict(s_next).jw_dense(n)?, beta / 2.0)?;
    let b = expm_hermitian(&h.restrict(s_prev).jw_dense(n)?, -beta / 2.0)?;
    Ok(a.mul(&b))
}

/// `Σ_{kl} = i tr(ρ γ_k γ_l)` for a normalized dense state.
pub fn covariance_from_dense(rho: &DenseOperator) -> Result<CovarianceMatrix> {
    let m = 2 * rho.n_modes;
    let mut cov = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in k + 1..m {
            let s = MajoranaString::gamma(k) * MajoranaString::gamma(l);
            let v = (Complex64::new(0.0, 1.0) * rho.expect_string(&s)?).re;
            cov[(k, l)] = v;
            cov[(l, k)] = -v;
        }
    }
    Ok(CovarianceMatrix(cov))
}
