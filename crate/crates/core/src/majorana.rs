//! Majorana strings: ordered products of Majorana operators with a phase.
//!
//! Indices are 0-based internally. The text format (`"+i g1 g2"`) and all
//! JSON documents use 1-based indices.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sites::{SiteSet, CAPACITY};

/// A power of `i`, stored as the exponent modulo 4.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(e: i64) -> Phase {
        Phase(e.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }


    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;

    fn neg(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// `phase * γ_{i1} γ_{i2} ... γ_{ik}` with `i1 < ... < ik`, or the zero operator.
///
/// Zero always has empty support and phase `+1`, so derived equality is
/// operator equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MajoranaString {
    support: SiteSet,
    phase: Phase,
    zero: bool,
}

impl MajoranaString {
    pub const fn identity() -> Self {
        MajoranaString { support: SiteSet::empty(), phase: Phase(0), zero: false }
    }

    pub const fn zero() -> Self {
        MajoranaString { support: SiteSet::empty(), phase: Phase(0), zero: true }
    }

    pub fn new(support: SiteSet, phase: Phase) -> Self {
        MajoranaString { support, phase, zero: false }
    }

    /// A single Majorana operator γ_i (0-based).
    pub fn gamma(i: usize) -> Self {
        Self::new(SiteSet::singleton(i), Phase::ONE)
    }

    /// The Hermitian string `i^{k/2} γ_S` for an even support of size k.
    pub fn hermitian(support: SiteSet) -> Self {
        let k = support.len();
        debug_assert!(k.is_multiple_of(2), "Hermitian convention needs even support");
        Self::new(support, Phase::from_exponent((k / 2) as i64))
    }

    /// `i γ_k γ_l` for `k < l` (0-based); its eigenvalues are ±1.
    pub fn pair(k: usize, l: usize) -> Self {
        assert!(k < l, "pair indices must be increasing");
        Self::new(SiteSet::from_indices([k, l]), Phase::I)
    }

    pub fn support(&self) -> SiteSet {
        self.support
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_identity_like(&self) -> bool {
        !self.zero && self.support.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_even(&self) -> bool {
        self.support.len().is_multiple_of(2)
    }

    pub fn scale_phase(self, p: Phase) -> Self {
        if self.zero {
            self
        } else {
            MajoranaString { phase: self.phase * p, ..self }
        }
    }

    pub fn negate(self) -> Self {
        self.scale_phase(Phase::MINUS_ONE)
    }

    /// Canonical product `self * rhs`.
    pub fn product(&self, rhs: &MajoranaString) -> MajoranaString {
        if self.zero || rhs.zero {
            return Self::zero();
        }
        // Moving each γ_b of rhs left past every γ_a of self with a > b.
        let swaps: usize = rhs.support.iter().map(|b| self.support.count_greater(b)).sum();
        let sign = if swaps % 2 == 1 { Phase::MINUS_ONE } else { Phase::ONE };
        MajoranaString {
            support: self.support.symmetric_difference(rhs.support),
            phase: self.phase * rhs.phase * sign,
            zero: false,
        }
    }

    pub fn commutes(&self, other: &MajoranaString) -> bool {
        if self.zero || other.zero {
            return true;
        }
        let a = self.support.len();
        let b = other.support.len();
        let c = self.support.intersection(other.support).len();
        (a * b + c).is_multiple_of(2)
    }

    pub fn adjoint(&self) -> MajoranaString {
        if self.zero {
            return *self;
        }
        let k = self.support.len();
        let rev = if (k * k.saturating_sub(1) / 2) % 2 == 1 { Phase::MINUS_ONE } else { Phase::ONE };
        MajoranaString { phase: self.phase.conj() * rev, ..*self }
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjoint() == *self
    }

    /// `tr(a) / 2^n`.
    pub fn normalized_trace(&self) -> Complex64 {
        if self.is_identity_like() {
            self.phase.to_complex()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Largest 0-based index in the support, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.support.last()
    }

    pub fn check_modes(&self, n_modes: usize) -> Result<()> {
        match self.max_index() {
            Some(m) if m >= 2 * n_modes => Err(Error::IndexOutOfRange { index: m + 1, n_modes }),
            _ => Ok(()),
        }
    }
}

impl Mul for MajoranaString {
    type Output = MajoranaString;
    fn mul(self, rhs: MajoranaString) -> MajoranaString {
        self.product(&rhs)
    }
}

impl fmt::Display for MajoranaString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return f.write_str("0");
        }
        f.write_str(match self.phase.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })?;
        for i in self.support.iter() {
            write!(f, " g{}", i + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for MajoranaString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MajoranaString({self})")
    }
}

fn parse_phase(tok: &str) -> Option<Phase> {
    Some(match tok {
        "+1" | "1" => Phase::ONE,
        "+i" | "i" => Phase::I,
        "-1" => Phase::MINUS_ONE,
        "-i" => Phase::MINUS_I,
        _ => return None,
    })
}

/// Parses `"+i g1 g2"`, `"-1 g3 g4"`, `"0"` or `"+1"`. Factors may appear in
/// any order and are multiplied left to right, so `"+1 g2 g1"` parses to
/// `"-1 g1 g2"`. The phase token is optional and defaults to `+1`.
impl FromStr for MajoranaString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut toks = s.split_whitespace().peekable();
        let first = *toks.peek().ok_or_else(|| Error::Parse("empty Majorana string".into()))?;
        if first == "0" {
            toks.next();
            if toks.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens after zero in {s:?}")));
            }
            return Ok(Self::zero());
        }
        let mut out = Self::identity();
        if let Some(p) = parse_phase(first) {
            out = out.scale_phase(p);
            toks.next();
        }
        for tok in toks {
            let idx: usize = tok
                .strip_prefix('g')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad factor {tok:?} in {s:?}")))?;
            if idx == 0 || idx > CAPACITY {
                return Err(Error::Parse(format!("index {idx} out of range 1..={CAPACITY}")));
            }
            out = out.product(&Self::gamma(idx - 1));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> MajoranaString {
        s.parse().unwrap()
    }

    #[test]
    fn product_examples() {
        assert_eq!(p("+i g1 g2") * p("+i g2 g3"), p("-1 g1 g3"));
        assert_eq!(p("g1 g2") * p("g1 g2"), p("-1"));
        assert_eq!(p("0") * p("g1 g2"), MajoranaString::zero());
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("g1 g2").commutes(&p("g2 g3")));
        assert!(p("g1 g2").commutes(&p("g3 g4")));
        assert!(!p("g1").commutes(&p("g2")));
        assert!(p("g1").commutes(&p("g1")));
    }

    #[test]
    fn hermiticity() {
        assert!(p("+i g1 g2").is_hermitian());
        assert!(!p("g1 g2").is_hermitian());
        assert!(p("-1 g1 g2 g3 g4").is_hermitian());
        assert!(MajoranaString::hermitian(SiteSet::from_indices([0, 1, 2, 3])).is_hermitian());
        assert!(MajoranaString::hermitian(SiteSet::from_indices([0, 1, 2, 3, 4, 5])).is_hermitian());
    }

    #[test]
    fn traces() {
        assert_eq!(MajoranaString::identity().normalized_trace(), Complex64::new(1.0, 0.0));
        assert_eq!(p("g1 g2").normalized_trace(), Complex64::new(0.0, 0.0));
        let x = p("-i g1 g2 g3 g4") * p("+i g1 g2 g3 g4");
        assert_eq!(x.normalized_trace(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "+1", "-1", "+i g1 g2", "-i g3 g4 g7 g100"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+1 g2 g1").to_string(), "-1 g1 g2");
        assert_eq!(p("g1 g2").to_string(), "+1 g1 g2");
        assert!("g0".parse::<MajoranaString>().is_err());
        assert!("0 g1".parse::<MajoranaString>().is_err());
        assert!("x".parse::<MajoranaString>().is_err());
    }

    #[test]
    fn pair_involution() {
        for k in 0..6 {
            for l in k + 1..6 {
                let x = MajoranaString::pair(k, l);
                assert_eq!(x * x, MajoranaString::identity());
            }
        }
    }

    #[test]
    fn exhaustive_commutes_matches_mul() {
        let all: Vec<_> = (0u32..64)
            .filter(|m| m.count_ones() % 2 == 0)
            .map(|m| MajoranaString::new(SiteSet::from_indices((0..6).filter(|i| m >> i & 1 == 1)), Phase::ONE))
            .collect();
        for a in &all {
            for b in &all {
                assert_eq!(a.commutes(b), *a * *b == *b * *a);
                let shared = a.support().intersection(b.support()).len();
                assert_eq!(a.commutes(b), shared % 2 == 0);
            }
        }
    }
}
