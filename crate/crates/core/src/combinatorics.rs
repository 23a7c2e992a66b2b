//! Exact binomials, combinadic rank/unrank and index selection.
//!
//! Patterns are ordered lexicographically on their increasing position
//! lists: for (4,2) the order is {0,1},{0,2},{0,3},{1,2},{1,3},{2,3}.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{domain, usage};
use crate::{Error, Result};

/// Largest p1 for which a selector keeps all of its patterns in memory.
const CACHE_LIMIT_BITS: usize = 20;

pub fn binomial(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(domain(format!("binomial({n}, {k}): k exceeds n")));
    }
    Ok(binomial_unchecked(n, k))
}

fn binomial_unchecked(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // exact at every step: acc * (n - i) / (i + 1) = C(n, i + 1)
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `⌊log2 C(n,k)⌋`, exactly. Zero when `k = n`.
pub fn index_bits(n: u64, k: u64) -> Result<usize> {
    let c = binomial(n, k)?;
    Ok((c.bits() - 1) as usize)
}

/// `⌊log2 x⌋` of a positive big integer.
pub fn floor_log2(x: &BigUint) -> usize {
    assert!(!x.is_zero(), "log2 of zero");
    (x.bits() - 1) as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivationPattern {
    n: usize,
    active: Vec<usize>,
}

impl ActivationPattern {
    pub fn new(n: usize, active: Vec<usize>) -> Result<Self> {
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain(format!("positions {active:?} not strictly increasing")));
        }
        if active.last().is_some_and(|&p| p >= n) {
            return Err(domain(format!("positions {active:?} out of range for n = {n}")));
        }
        Ok(Self { n, active })
    }

    pub fn full(n: usize) -> Self {
        Self { n, active: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.active.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.active
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.active.binary_search(&pos).is_ok()
    }

    /// Activity mask of length `n`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &p in &self.active {
            m[p] = true;
        }
        m
    }
}

/// The `rank`-th k-subset of `[0, n)` in lexicographic order.
pub fn unrank(rank: &BigUint, n: usize, k: usize) -> Result<ActivationPattern> {
    let total = binomial(n as u64, k as u64)?;
    if *rank >= total {
        return Err(domain(format!("rank {rank} out of range [0, {total})")));
    }
    let mut rest = rank.clone();
    let mut active = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        let mut c = next;
        loop {
            let count = binomial_unchecked((n - c - 1) as u64, (k - slot - 1) as u64);
            if rest < count {
                break;
            }
            rest -= count;
            c += 1;
        }
        active.push(c);
        next = c + 1;
    }
    Ok(ActivationPattern { n, active })
}

pub fn unrank_u64(rank: u64, n: usize, k: usize) -> Result<ActivationPattern> {
    unrank(&BigUint::from(rank), n, k)
}

/// Inverse of [`unrank`].
pub fn rank(pattern: &ActivationPattern) -> BigUint {
    let (n, k) = (pattern.n, pattern.k());
    let mut acc = BigUint::zero();
    let mut next = 0usize;
    for (slot, &pos) in pattern.active.iter().enumerate() {
        for c in next..pos {
            acc += binomial_unchecked((n - c - 1) as u64, (k - slot - 1) as u64);
        }
        next = pos + 1;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorMode {
    LookupTable,
    Combinadic,
}

/// Maps `p1` index bits to one of `2^p1` activation patterns.
#[derive(Debug, Clone)]
pub struct IndexSelector {
    mode: SelectorMode,
    n: usize,
    k: usize,
    p1: usize,
    patterns: Option<Vec<ActivationPattern>>,
    inverse: HashMap<Vec<usize>, u64>,
}

impl IndexSelector {
    pub fn combinadic(n: usize, k: usize) -> Result<Self> {
        if k > n || n == 0 {
            return Err(domain(format!("invalid selector size n = {n}, k = {k}")));
        }
        let p1 = index_bits(n as u64, k as u64)?;
        let mut sel = Self { mode: SelectorMode::Combinadic, n, k, p1, patterns: None, inverse: HashMap::new() };
        if p1 <= CACHE_LIMIT_BITS {
            let patterns: Vec<_> = (0..1u64 << p1).map(|r| unrank_u64(r, n, k)).collect::<Result<_>>()?;
            sel.inverse = patterns.iter().enumerate().map(|(i, p)| (p.active.clone(), i as u64)).collect();
            sel.patterns = Some(patterns);
        }
        Ok(sel)
    }

    /// Builds a lookup-table selector; `entries[i]` is the pattern for bit value `i`.
    pub fn lookup(n: usize, k: usize, entries: Vec<ActivationPattern>) -> Result<Self> {
        let p1 = index_bits(n as u64, k as u64)?;
        if entries.len() != 1usize << p1 {
            return Err(Error::InvalidTable(format!(
                "lookup table for ({n},{k}) needs {} entries, got {}",
                1usize << p1,
                entries.len()
            )));
        }
        let mut inverse = HashMap::new();
        for (i, p) in entries.iter().enumerate() {
            if p.n != n || p.k() != k {
                return Err(Error::InvalidTable(format!("entry {i} is not a {k}-of-{n} pattern")));
            }
            if inverse.insert(p.active.clone(), i as u64).is_some() {
                return Err(Error::InvalidTable(format!("duplicate pattern {:?}", p.active)));
            }
        }
        Ok(Self { mode: SelectorMode::LookupTable, n, k, p1, patterns: Some(entries), inverse })
    }

    pub fn mode(&self) -> SelectorMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of index bits `⌊log2 C(n,k)⌋`.
    pub fn p1(&self) -> usize {
        self.p1
    }

    /// Pattern for the integer value of the index bits.
    pub fn select_index(&self, value: u64) -> Result<ActivationPattern> {
        if self.p1 < 64 && value >> self.p1 != 0 {
            return Err(domain(format!("index {value} needs more than {} bits", self.p1)));
        }
        match &self.patterns {
            Some(p) => Ok(p[value as usize].clone()),
            None => unrank_u64(value, self.n, self.k),
        }
    }

    pub fn select_pattern(&self, bits: &[u8]) -> Result<ActivationPattern> {
        if bits.len() != self.p1 {
            return Err(usage(format!("expected {} index bits, got {}", self.p1, bits.len())));
        }
        if self.p1 > 64 {
            let value = BigUint::from_radix_be(bits, 2).unwrap_or_default();
            return unrank(&value, self.n, self.k);
        }
        self.select_index(bits::to_u64(bits))
    }

    /// Index-bit value of a pattern, or `None` if the pattern is not one of
    /// the `2^p1` patterns in use.
    pub fn index_of(&self, pattern: &ActivationPattern) -> Option<u64> {
        if pattern.n != self.n || pattern.k() != self.k {
            return None;
        }
        if self.patterns.is_some() {
            return self.inverse.get(&pattern.active).copied();
        }
        let r = rank(pattern);
        (r.bits() as usize <= self.p1).then(|| r.to_u64()).flatten()
    }

    /// All patterns in use, in index order. Only for cached selectors.
    pub fn patterns(&self) -> Option<&[ActivationPattern]> {
        self.patterns.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Lexicographic k-subsets of [0,n), by brute-force filtering of bitmasks.
    fn enumerate_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
            .collect();
        out.sort();
        out
    }

    fn pascal(n: usize) -> Vec<Vec<u64>> {
        let mut rows = vec![vec![1u64]];
        for i in 1..=n {
            let prev = &rows[i - 1];
            let mut row = vec![1u64; i + 1];
            for j in 1..i {
                row[j] = prev[j - 1] + prev[j];
            }
            rows.push(row);
        }
        rows
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(4, 2).unwrap(), BigUint::from(6u32));
        let p = pascal(30);
        for n in 0..=30 {
            for k in 0..=n {
                assert_eq!(binomial(n as u64, k as u64).unwrap(), BigUint::from(p[n][k]));
            }
        }
        assert_eq!(p[8][4], 70);
        assert!(binomial(3, 4).is_err());
    }

    #[test]
    fn binomial_512_256_leading_digits() {
        let s = binomial(512, 256).unwrap().to_str_radix(10);
        assert_eq!(s.len(), 153);
        assert!(s.starts_with("47255"), "{}", &s[..10]);
    }

    #[test]
    fn index_bits_values() {
        assert_eq!(index_bits(4, 2).unwrap(), 2);
        assert_eq!(index_bits(16, 10).unwrap(), 12);
        assert_eq!(index_bits(8, 4).unwrap(), 6);
        assert_eq!(index_bits(4, 4).unwrap(), 0);
        for n in 1..40u64 {
            for k in 0..=n {
                assert_eq!(index_bits(n, k).unwrap(), index_bits(n, n - k).unwrap());
            }
        }
    }

    #[test]
    fn unrank_matches_enumeration() {
        for n in 1..=10 {
            for k in 0..=n {
                for (r, subset) in enumerate_subsets(n, k).iter().enumerate() {
                    let p = unrank_u64(r as u64, n, k).unwrap();
                    assert_eq!(p.positions(), subset.as_slice());
                    assert_eq!(rank(&p), BigUint::from(r));
                }
            }
        }
        assert_eq!(unrank_u64(5, 4, 2).unwrap().positions(), &[2, 3]);
        assert_eq!(unrank_u64(0, 4, 4).unwrap().positions(), &[0, 1, 2, 3]);
        assert!(unrank_u64(6, 4, 2).is_err());
    }

    #[test]
    fn rank_round_trip_8_4() {
        let subsets = enumerate_subsets(8, 4);
        assert_eq!(subsets.len(), 70);
        for s in subsets {
            let p = ActivationPattern::new(8, s).unwrap();
            let r = rank(&p);
            assert_eq!(unrank(&r, 8, 4).unwrap(), p);
        }
    }

    #[test]
    fn rank_unrank_large() {
        let p = unrank(&(binomial(512, 256).unwrap() - 1u32), 512, 256).unwrap();
        assert_eq!(p.positions()[0], 256);
        assert_eq!(rank(&p), binomial(512, 256).unwrap() - 1u32);
    }

    #[test]
    fn malformed_patterns() {
        assert!(ActivationPattern::new(4, vec![1, 1]).is_err());
        assert!(ActivationPattern::new(4, vec![2, 1]).is_err());
        assert!(ActivationPattern::new(4, vec![0, 4]).is_err());
    }

    #[test]
    fn select_pattern_combinadic() {
        let sel = IndexSelector::combinadic(4, 2).unwrap();
        assert_eq!(sel.p1(), 2);
        assert_eq!(sel.select_pattern(&[0, 0]).unwrap().positions(), &[0, 1]);
        assert_eq!(sel.select_pattern(&[1, 1]).unwrap().positions(), &[1, 2]);
        assert!(matches!(sel.select_pattern(&[1]), Err(Error::Usage(_))));
        let full = IndexSelector::combinadic(4, 4).unwrap();
        assert_eq!(full.select_pattern(&[]).unwrap().positions(), &[0, 1, 2, 3]);
        let illegal = ActivationPattern::new(4, vec![2, 3]).unwrap();
        assert_eq!(sel.index_of(&illegal), None);
    }

    #[test]
    fn select_is_injective() {
        for (n, k) in [(4, 2), (8, 4), (16, 10), (6, 3), (12, 1)] {
            let sel = IndexSelector::combinadic(n, k).unwrap();
            let pats = sel.patterns().unwrap();
            let set: std::collections::HashSet<_> = pats.iter().collect();
            assert_eq!(set.len(), 1 << sel.p1());
            for (i, p) in pats.iter().enumerate() {
                assert_eq!(sel.index_of(p), Some(i as u64));
            }
        }
    }

    #[test]
    fn uncached_selector() {
        let sel = IndexSelector::combinadic(64, 32).unwrap();
        assert!(sel.patterns().is_none());
        let p = sel.select_index(123_456_789).unwrap();
        assert_eq!(sel.index_of(&p), Some(123_456_789));
        let big = IndexSelector::combinadic(512, 256).unwrap();
        assert_eq!(big.p1(), 507);
        let bits: Vec<u8> = (0..507).map(|i| (i % 3 == 0) as u8).collect();
        let p = big.select_pattern(&bits).unwrap();
        assert_eq!(p.k(), 256);
    }

    #[test]
    fn lookup_validation() {
        let pats: Vec<_> = [[0, 1], [2, 3], [0, 2], [1, 3]]
            .iter()
            .map(|p| ActivationPattern::new(4, p.to_vec()).unwrap())
            .collect();
        let sel = IndexSelector::lookup(4, 2, pats.clone()).unwrap();
        assert_eq!(sel.select_pattern(&[0, 1]).unwrap().positions(), &[2, 3]);
        assert!(IndexSelector::lookup(4, 2, pats[..3].to_vec()).is_err());
        let mut dup = pats;
        dup[3] = dup[0].clone();
        assert!(IndexSelector::lookup(4, 2, dup).is_err());
    }
}
