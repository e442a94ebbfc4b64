//! Fixed-width bitsets over Majorana indices.

use std::fmt;

#[cfg(not(feature = "wide-support"))]
const WORDS: usize = 2;
#[cfg(feature = "wide-support")]
const WORDS: usize = 4;

/// Maximum number of Majorana modes (2n) supported by [`SiteSet`].
pub const CAPACITY: usize = 64 * WORDS;

/// A set of 0-based Majorana indices, stored as a bitset.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SiteSet([u64; WORDS]);

impl SiteSet {
    pub const fn empty() -> Self {
        SiteSet([0; WORDS])
    }

    /// `{0, 1, ..., len-1}`.
    pub fn full(len: usize) -> Self {
        assert!(len <= CAPACITY, "site set capacity exceeded");
        let mut s = Self::empty();
        for (w, word) in s.0.iter_mut().enumerate() {
            let lo = w * 64;
            if len >= lo + 64 {
                *word = u64::MAX;
            } else if len > lo {
                *word = (1u64 << (len - lo)) - 1;
            }
        }
        s
    }

    pub fn singleton(i: usize) -> Self {
        let mut s = Self::empty();
        s.insert(i);
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut s = Self::empty();
        for i in it {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < CAPACITY, "site index {i} exceeds capacity {CAPACITY}");
        self.0[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        if i < CAPACITY {
            self.0[i / 64] &= !(1u64 << (i % 64));
        }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < CAPACITY && self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[inline]
    fn zip(self, other: Self, f: impl Fn(u64, u64) -> u64) -> Self {
        let mut out = [0u64; WORDS];
        for (k, o) in out.iter_mut().enumerate() {
            *o = f(self.0[k], other.0[k]);
        }
        SiteSet(out)
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    #[inline]
    pub fn symmetric_difference(self, other: Self) -> Self {
        self.zip(other, |a, b| a ^ b)
    }

    #[inline]
    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(*other).is_empty()
    }

    #[inline]
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(*other).is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn last(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Number of elements strictly greater than `i`.
    #[inline]
    pub fn count_greater(&self, i: usize) -> usize {
        let w = i / 64;
        let b = i % 64;
        let mut n = if b == 63 { 0 } else { (self.0[w] >> (b + 1)).count_ones() as usize };
        for word in &self.0[w + 1..] {
            n += word.count_ones() as usize;
        }
        n
    }

    /// Ascending iterator over members.
    pub fn iter(&self) -> SiteIter {
        SiteIter { words: self.0, word: 0 }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

pub struct SiteIter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for SiteIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let tz = w.trailing_zeros() as usize;
                self.words[self.word] = w & (w - 1);
                return Some(self.word * 64 + tz);
            }
            self.word += 1;
        }
        None
    }
}

impl FromIterator<usize> for SiteSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_indices(iter)
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = SiteSet::from_indices([0, 3, 64, 100]);
        let b = SiteSet::from_indices([3, 5, 100]);
        assert_eq!(a.len(), 4);
        assert_eq!(a.intersection(b).to_vec(), vec![3, 100]);
        assert_eq!(a.symmetric_difference(b).to_vec(), vec![0, 5, 64]);
        assert_eq!(a.first(), Some(0));
        assert_eq!(a.last(), Some(100));
        assert_eq!(a.count_greater(3), 2);
        assert_eq!(a.count_greater(63), 2);
        assert_eq!(a.count_greater(127), 0);
        assert!(SiteSet::from_indices([3]).is_subset(&b));
    }

    #[test]
    fn full_set() {
        assert_eq!(SiteSet::full(0).len(), 0);
        assert_eq!(SiteSet::full(64).len(), 64);
        assert_eq!(SiteSet::full(70).last(), Some(69));
        assert_eq!(SiteSet::full(CAPACITY).len(), CAPACITY);
    }
}
