//! SYK instances, exact energy curves and the Gaussian-separation report.

mod optimizer;

pub use optimizer::{gaussian_energy, gaussian_energy_opt, quadratic_optimum, reference_covariance, OptConfig, OptResult};

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::oracle::JordanWigner;
use crate::sites::SiteSet;

/// Default cap on the number of couplings `C(2n, q)`.
pub const DEFAULT_COUPLING_CAP: usize = 1_000_000;

/// Overall scale applied to the couplings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Divide by `n^{q/2}`.
    QHalf,
    /// Divide by `n^{(q-1)/2}`.
    QMinusOneHalf,
}

impl Normalization {
    pub fn factor(self, n: usize, q: usize) -> f64 {
        let n = n as f64;
        match self {
            Normalization::None => 1.0,
            Normalization::QHalf => n.powf(q as f64 / 2.0).recip(),
            Normalization::QMinusOneHalf => n.powf((q as f64 - 1.0) / 2.0).recip(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SykInstance {
    pub n: usize,
    pub q: usize,
    pub seed: u64,
    /// `(support, J)` in lexicographic order of the 0-based q-subsets.
    pub couplings: Vec<(SiteSet, f64)>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `C(2n, q)` couplings drawn i.i.d. standard normal from `seed`.
pub fn syk_generate(n: usize, q: usize, seed: u64) -> Result<SykInstance> {
    syk_generate_capped(n, q, seed, DEFAULT_COUPLING_CAP)
}

pub fn syk_generate_capped(n: usize, q: usize, seed: u64, cap: usize) -> Result<SykInstance> {
    let m = 2 * n;
    if q == 0 || q % 2 == 1 || q > m {
        return Err(Error::Invalid(format!("q = {q} must be even with 2 <= q <= 2n = {m}")));
    }
    let count = binomial(m, q);
    if count > cap as u128 {
        return Err(Error::Invalid(format!("C({m}, {q}) = {count} couplings exceed the cap of {cap}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = Vec::with_capacity(count as usize);
    let mut idx: Vec<usize> = (0..q).collect();
    loop {
        let j: f64 = StandardNormal.sample(&mut rng);
        couplings.push((SiteSet::from_indices(idx.iter().copied()), j));
        // Next combination in lexicographic order.
        let mut p = q;
        while p > 0 && idx[p - 1] == m - q + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        idx[p - 1] += 1;
        for r in p..q {
            idx[r] = idx[r - 1] + 1;
        }
    }
    Ok(SykInstance { n, q, seed, couplings })
}

impl SykInstance {
    /// `H = Σ J_A i^{q/2} γ_A`, scaled by the normalization.
    pub fn hamiltonian(&self, norm: Normalization) -> Result<LocalHamiltonian> {
        let f = norm.factor(self.n, self.q);
        LocalHamiltonian::new(self.n, self.couplings.iter().map(|&(s, j)| (s, j * f)).collect(), false)
    }

    /// `(tr H / 2^n, tr H² / 2^n)` from the couplings alone.
    pub fn moments(&self, norm: Normalization) -> (f64, f64) {
        let f = norm.factor(self.n, self.q);
        (0.0, self.couplings.iter().map(|(_, j)| (j * f).powi(2)).sum())
    }
}

/// Spectral data of a Hamiltonian; thermal averages come from eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn of(h: &LocalHamiltonian) -> Result<Self> {
        let dense = h.jw_dense(h.n_modes())?;
        let herm = (&dense.matrix + dense.matrix.adjoint()) * num_complex::Complex64::new(0.5, 0.0);
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Ok(Spectrum { eigenvalues })
    }

    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// `⟨H^k⟩_β` for `k = 1, 2, 3`.
    pub fn thermal_moments(&self, beta: f64) -> [f64; 3] {
        let shift = self.eigenvalues.iter().map(|&x| -beta * x).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut m = [0.0; 3];
        for &x in &self.eigenvalues {
            let w = (-beta * x - shift).exp();
            z += w;
            m[0] += w * x;
            m[1] += w * x * x;
            m[2] += w * x * x * x;
        }
        m.map(|v| v / z)
    }

    /// `⟨-H⟩_β`.
    pub fn energy(&self, beta: f64) -> f64 {
        -self.thermal_moments(beta)[0]
    }

    /// `d/dβ ⟨-H⟩_β = ⟨H²⟩ - ⟨H⟩²`.
    pub fn first_derivative(&self, beta: f64) -> f64 {
        let [m1, m2, _] = self.thermal_moments(beta);
        m2 - m1 * m1
    }

    /// `d²/dβ² ⟨-H⟩_β = -⟨H³⟩ + 3⟨H⟩⟨H²⟩ - 2⟨H⟩³`.
    pub fn second_derivative(&self, beta: f64) -> f64 {
        let [m1, m2, m3] = self.thermal_moments(beta);
        -m3 + 3.0 * m1 * m2 - 2.0 * m1.powi(3)
    }
}

/// `⟨-H⟩_β` over a grid.
pub fn gibbs_energy_curve(h: &LocalHamiltonian, betas: &[f64]) -> Result<Vec<f64>> {
    let sp = Spectrum::of(h)?;
    Ok(betas.iter().map(|&b| sp.energy(b)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub step: f64,
    pub finite_difference: f64,
    pub variance_formula: f64,
    pub relative_error: f64,
    pub energy_at_zero: f64,
    pub max_second_derivative: f64,
    pub second_derivative_bound: f64,
    pub operator_norm: f64,
}

/// Central difference of `⟨-H⟩_β` at `β = 0` against the variance formula,
/// and the second derivative on `betas` against `6 ‖H‖³`.
pub fn derivative_check(h: &LocalHamiltonian, step: f64, betas: &[f64]) -> Result<DerivativeCheck> {
    let sp = Spectrum::of(h)?;
    let fd = (sp.energy(step) - sp.energy(-step)) / (2.0 * step);
    let var = sp.first_derivative(0.0);
    let norm = sp.norm();
    let max2 = betas.iter().map(|&b| sp.second_derivative(b).abs()).fold(0.0, f64::max);
    Ok(DerivativeCheck {
        step,
        finite_difference: fd,
        variance_formula: var,
        relative_error: if var == 0.0 { fd.abs() } else { ((fd - var) / var).abs() },
        energy_at_zero: sp.energy(0.0),
        max_second_derivative: max2,
        second_derivative_bound: 6.0 * norm.powi(3),
        operator_norm: norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub beta: f64,
    pub gibbs_energy: f64,
    pub gaussian_ceiling_lb: f64,
    pub lower_bound_dbeta_half: f64,
    pub certificate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub rows: Vec<ReportRow>,
    /// Variance of `H` at `β = 0`.
    pub d: f64,
    /// Largest `|d²/dβ² ⟨-H⟩|` on the grid.
    pub s: f64,
    pub operator_norm: f64,
    pub best_gaussian_energy: f64,
    pub slack: f64,
    pub monotone: bool,
    pub any_certificate: bool,
}

impl EnergyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,gibbs_energy,gaussian_ceiling_lb,lower_bound_Dbeta_half,certificate\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.beta, r.gibbs_energy, r.gaussian_ceiling_lb, r.lower_bound_dbeta_half, r.certificate
            ));
        }
        out
    }
}

/// Uniform grid `0, β_max/(g-1), ..., β_max`.
pub fn beta_grid(beta_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        g => (0..g).map(|k| beta_max * k as f64 / (g - 1) as f64).collect(),
    }
}

/// Gibbs energy against the best Gaussian energy found. A grid point is
/// certified when the Gibbs energy exceeds the ceiling by more than `slack`.
pub fn separation_report(h: &LocalHamiltonian, beta_max: f64, points: usize, opt: &OptConfig) -> Result<EnergyReport> {
    let betas = beta_grid(beta_max, points);
    let sp = Spectrum::of(h)?;
    let energies: Vec<f64> = betas.iter().map(|&b| sp.energy(b)).collect();
    let d = sp.first_derivative(0.0);
    let s = betas.iter().map(|&b| sp.second_derivative(b).abs()).fold(0.0, f64::max);
    let best = gaussian_energy_opt(h, opt)?.best;
    let slack = opt.slack * best.abs().max(1.0);
    let beta0 = if s > 0.0 { d / s } else { f64::INFINITY };
    let rows: Vec<ReportRow> = betas
        .iter()
        .zip(&energies)
        .map(|(&beta, &e)| ReportRow {
            beta,
            gibbs_energy: e,
            gaussian_ceiling_lb: best,
            lower_bound_dbeta_half: d * beta.min(beta0) / 2.0,
            certificate: e - best - slack > 0.0,
        })
        .collect();
    let monotone = energies.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    Ok(EnergyReport {
        any_certificate: rows.iter().any(|r| r.certificate),
        rows,
        d,
        s,
        operator_norm: sp.norm(),
        best_gaussian_energy: best,
        slack,
        monotone,
    })
}
