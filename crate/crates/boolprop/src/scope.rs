//! Variable scopes and the subset-index convention.
//!
//! A table over the power set of a scope is indexed by a bitmask in which
//! bit `j` stands for the `j`-th smallest variable of the scope.

use std::fmt;

use crate::PotentialError;

/// Variable identifier. Valid ids start at 1.
pub type VarId = u32;

/// Largest scope a dense table can be indexed over.
pub const MAX_SCOPE: usize = 63;

/// A strictly ascending list of variables.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Scope {
    vars: Vec<VarId>,
}

impl Scope {
    /// Builds a scope from an ascending, duplicate-free list.
    pub fn new(vars: Vec<VarId>) -> Result<Self, PotentialError> {
        if vars.len() > MAX_SCOPE {
            return Err(PotentialError::ScopeTooLarge(vars.len()));
        }
        if vars.contains(&0) {
            return Err(PotentialError::InvalidVar(0));
        }
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PotentialError::UnsortedScope(vars));
        }
        Ok(Scope { vars })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut vars: Vec<VarId>) -> Result<Self, PotentialError> {
        vars.sort_unstable();
        vars.dedup();
        Scope::new(vars)
    }

    pub fn empty() -> Self {
        Scope { vars: Vec::new() }
    }

    pub fn singleton(v: VarId) -> Self {
        assert!(v > 0, "variable ids start at 1");
        Scope { vars: vec![v] }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of subsets, `2^len`.
    pub fn table_len(&self) -> usize {
        1usize << self.vars.len()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    pub fn min(&self) -> Option<VarId> {
        self.vars.first().copied()
    }

    pub fn max(&self) -> Option<VarId> {
        self.vars.last().copied()
    }

    pub fn is_subset(&self, other: &Scope) -> bool {
        self.vars.iter().all(|&v| other.contains(v))
    }

    pub fn union(&self, other: &Scope) -> Result<Scope, PotentialError> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            let a = self.vars.get(i).copied().unwrap_or(VarId::MAX);
            let b = other.vars.get(j).copied().unwrap_or(VarId::MAX);
            if a < b {
                out.push(a);
                i += 1;
            } else if b < a {
                out.push(b);
                j += 1;
            } else {
                out.push(a);
                i += 1;
                j += 1;
            }
        }
        Scope::new(out)
    }

    pub fn intersection(&self, other: &Scope) -> Scope {
        Scope {
            vars: self.vars.iter().copied().filter(|&v| other.contains(v)).collect(),
        }
    }

    pub fn difference(&self, other: &Scope) -> Scope {
        Scope {
            vars: self.vars.iter().copied().filter(|&v| !other.contains(v)).collect(),
        }
    }

    /// Scope with the smallest variable removed.
    pub fn without_min(&self) -> Scope {
        Scope {
            vars: self.vars.iter().skip(1).copied().collect(),
        }
    }

    /// Bitmask, relative to `self`, of the positions held by `sub`.
    pub fn mask_of(&self, sub: &Scope) -> Result<u64, PotentialError> {
        let mut mask = 0u64;
        for &v in sub.vars() {
            match self.position(v) {
                Some(p) => mask |= 1 << p,
                None => {
                    return Err(PotentialError::NotSubset {
                        sub: sub.clone(),
                        sup: self.clone(),
                    })
                }
            }
        }
        Ok(mask)
    }

    /// Decodes a subset index into the variables it selects.
    pub fn decode(&self, index: u64) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(j, _)| index >> j & 1 == 1)
            .map(|(_, &v)| v)
            .collect()
    }

    /// Encodes a set of variables (all in scope) as a subset index.
    pub fn encode(&self, subset: &[VarId]) -> Result<u64, PotentialError> {
        let mut t = 0u64;
        for &v in subset {
            let p = self.position(v).ok_or(PotentialError::InvalidVar(v))?;
            t |= 1 << p;
        }
        Ok(t)
    }
}

impl fmt::Debug for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Gathers the bits of `t` selected by `mask` into the low bits.
#[inline]
pub fn extract_bits(t: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if t & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        mask ^= low;
    }
    out
}

/// Scatters the low bits of `t` into the positions selected by `mask`.
#[inline]
pub fn deposit_bits(t: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if t >> k & 1 == 1 {
            out |= low;
        }
        k += 1;
        mask ^= low;
    }
    out
}

/// Walks `0..2^width` in order while tracking, for several masks, the
/// projected index `extract_bits(t, mask)` in O(1) per mask per step.
pub(crate) struct IndexWalker {
    width: usize,
    t: u64,
    idx: Vec<u64>,
    // weight[m][b]: contribution of bit b to projection m
    weight: Vec<Vec<u64>>,
    // low[m][b]: sum of weight[m][0..b]
    low: Vec<Vec<u64>>,
}

impl IndexWalker {
    pub(crate) fn new(width: usize, masks: &[u64]) -> Self {
        let mut weight = Vec::with_capacity(masks.len());
        let mut low = Vec::with_capacity(masks.len());
        for &m in masks {
            let mut w = vec![0u64; width + 1];
            let mut l = vec![0u64; width + 1];
            let mut k = 0;
            for (b, slot) in w.iter_mut().enumerate().take(width) {
                if m >> b & 1 == 1 {
                    *slot = 1 << k;
                    k += 1;
                }
            }
            for b in 0..width {
                l[b + 1] = l[b] + w[b];
            }
            weight.push(w);
            low.push(l);
        }
        IndexWalker {
            width,
            t: 0,
            idx: vec![0; masks.len()],
            weight,
            low,
        }
    }

    pub(crate) fn position(&self) -> u64 {
        self.t
    }

    pub(crate) fn projected(&self) -> &[u64] {
        &self.idx
    }

    /// Moves to `t + 1`. Returns false once the walk is exhausted.
    pub(crate) fn advance(&mut self) -> bool {
        let next = self.t + 1;
        if next >> self.width != 0 {
            self.t = next;
            return false;
        }
        let k = next.trailing_zeros() as usize;
        for (m, idx) in self.idx.iter_mut().enumerate() {
            *idx = *idx - self.low[m][k] + self.weight[m][k];
        }
        self.t = next;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_unsorted_and_zero() {
        assert!(Scope::new(vec![2, 1]).is_err());
        assert!(Scope::new(vec![1, 1]).is_err());
        assert!(Scope::new(vec![0]).is_err());
        assert!(Scope::new((1..=64).collect()).is_err());
    }

    #[test]
    fn union_and_intersection() {
        let a = Scope::new(vec![1, 3, 5]).unwrap();
        let b = Scope::new(vec![2, 3]).unwrap();
        assert_eq!(a.union(&b).unwrap().vars(), &[1, 2, 3, 5]);
        assert_eq!(a.intersection(&b).vars(), &[3]);
        assert_eq!(a.difference(&b).vars(), &[1, 5]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = Scope::new(vec![2, 4, 9]).unwrap();
        for t in 0..8u64 {
            assert_eq!(s.encode(&s.decode(t)).unwrap(), t);
        }
        assert_eq!(s.decode(0b101), vec![2, 9]);
    }

    #[test]
    fn bit_gather_scatter() {
        assert_eq!(extract_bits(0b1101, 0b1010), 0b10);
        assert_eq!(deposit_bits(0b11, 0b1010), 0b1010);
        for t in 0..64u64 {
            let m = 0b101101;
            assert_eq!(deposit_bits(extract_bits(t, m), m), t & m);
        }
    }

    #[test]
    fn walker_matches_extract() {
        let masks = [0b1011u64, 0b0100, 0, 0b1111];
        let mut w = IndexWalker::new(4, &masks);
        loop {
            let t = w.position();
            for (m, &mask) in masks.iter().enumerate() {
                assert_eq!(w.projected()[m], extract_bits(t, mask));
            }
            if !w.advance() {
                break;
            }
        }
    }
}
