//! Supports, half-uniform distributions and sample multisets over `[n]`.
//!
//! A distribution here is always uniform on its support, so it is fully
//! described by a [`SupportSet`]. Membership reads made on behalf of a query
//! algorithm go through [`SupportSet::contains`], which charges one
//! operation to an [`OpCounter`]. Setup code (generation, preprocessing,
//! verification) uses [`SupportSet::get`], which is unmetered.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WORD: usize = 64;

/// Fixed-width bit vector over `[n]` with cached cardinality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    words: Vec<u64>,
    n: usize,
    len: usize,
}

impl std::fmt::Debug for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SupportSet")
            .field("n", &self.n)
            .field("elements", &self.iter().collect::<Vec<_>>())
            .finish()
    }
}

impl SupportSet {
    pub fn empty(n: usize) -> Self {
        SupportSet {
            words: vec![0; n.div_ceil(WORD)],
            n,
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.set(i);
        }
        s
    }

    /// Builds a support from element indices. Duplicates are ignored.
    pub fn from_elements<I>(n: usize, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = u32>,
    {
        let mut s = Self::empty(n);
        for e in elements {
            if e as usize >= n {
                return Err(Error::domain(format!(
                    "element {e} outside domain [0, {n})"
                )));
            }
            s.set(e as usize);
        }
        Ok(s)
    }

    fn set(&mut self, i: usize) {
        let (w, b) = (i / WORD, i % WORD);
        let mask = 1u64 << b;
        if self.words[w] & mask == 0 {
            self.words[w] |= mask;
            self.len += 1;
        }
    }

    pub(crate) fn insert(&mut self, i: u32) {
        self.set(i as usize)
    }

    pub fn domain(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unmetered membership read. Panics on out-of-range elements.
    #[inline]
    pub fn get(&self, i: u32) -> bool {
        let i = i as usize;
        assert!(i < self.n, "element {i} outside domain [0, {})", self.n);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Counted membership query: the cost primitive of every query algorithm.
    #[inline]
    pub fn contains(&self, i: u32, ctr: &mut OpCounter) -> Result<bool> {
        ctr.membership_ops += 1;
        if i as usize >= self.n {
            return Err(Error::domain(format!(
                "element {i} outside domain [0, {})",
                self.n
            )));
        }
        Ok(self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some((w * WORD + b) as u32)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}

/// Number of counted membership queries made by one algorithm invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub membership_ops: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }
}

/// A distribution uniform on its support, with the support materialized as
/// a sorted index array for O(1) sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfUniformDistribution {
    support: SupportSet,
    elements: Vec<u32>,
}

impl HalfUniformDistribution {
    pub fn new(support: SupportSet) -> Self {
        let elements = support.to_vec();
        HalfUniformDistribution { support, elements }
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn domain(&self) -> usize {
        self.support.domain()
    }

    /// Probability mass at `i`.
    pub fn mass(&self, i: u32) -> f64 {
        if self.support.get(i) {
            1.0 / self.support.len() as f64
        } else {
            0.0
        }
    }

    /// Draws `m` i.i.d. uniform elements of the support, keeping draw order.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<QueryMultiset> {
        if self.elements.is_empty() {
            return Err(Error::domain("cannot sample from an empty support"));
        }
        let draws = (0..m)
            .map(|_| self.elements[rng.random_range(0..self.elements.len())])
            .collect();
        QueryMultiset::from_draws(self.domain(), draws)
    }
}

/// L1 distance between two distributions that are uniform on their supports.
///
/// Uses the general formula so supports of different sizes are handled.
pub fn l1_distance(p: &HalfUniformDistribution, q: &HalfUniformDistribution) -> Result<f64> {
    support_l1(p.support(), q.support())
}

pub fn support_l1(p: &SupportSet, q: &SupportSet) -> Result<f64> {
    if p.domain() != q.domain() {
        return Err(Error::domain(format!(
            "domain mismatch: {} vs {}",
            p.domain(),
            q.domain()
        )));
    }
    if p.is_empty() || q.is_empty() {
        return Err(Error::domain("L1 distance needs nonempty supports"));
    }
    let (a, b) = (p.len() as f64, q.len() as f64);
    let both = p.intersection_len(q) as f64;
    let only_p = a - both;
    let only_q = b - both;
    Ok(only_p / a + only_q / b + both * (1.0 / a - 1.0 / b).abs())
}

/// Samples from a query distribution: the draw sequence, the multiplicity of
/// each element, and the set `Q` of distinct elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMultiset {
    draws: Vec<u32>,
    counts: BTreeMap<u32, u32>,
    distinct: SupportSet,
}

impl QueryMultiset {
    pub fn from_draws(n: usize, draws: Vec<u32>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut distinct = SupportSet::empty(n);
        for &e in &draws {
            if e as usize >= n {
                return Err(Error::domain(format!(
                    "element {e} outside domain [0, {n})"
                )));
            }
            *counts.entry(e).or_insert(0) += 1;
            distinct.insert(e);
        }
        Ok(QueryMultiset {
            draws,
            counts,
            distinct,
        })
    }

    pub fn empty(n: usize) -> Self {
        QueryMultiset {
            draws: Vec::new(),
            counts: BTreeMap::new(),
            distinct: SupportSet::empty(n),
        }
    }

    /// Samples in the order they were drawn.
    pub fn draws(&self) -> &[u32] {
        &self.draws
    }

    pub fn counts(&self) -> &BTreeMap<u32, u32> {
        &self.counts
    }

    pub fn count(&self, e: u32) -> u32 {
        self.counts.get(&e).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> &SupportSet {
        &self.distinct
    }

    pub fn total(&self) -> usize {
        self.draws.len()
    }

    pub fn domain(&self) -> usize {
        self.distinct.domain()
    }
}
