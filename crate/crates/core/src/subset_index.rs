//! The Subset index.
//!
//! Preprocessing samples `L` probe sets `S_i` of `ℓ` distinct domain
//! elements and stores, for each, the bucket `A_i` of distributions whose
//! support contains `S_i`. A query forms the set `Q` of distinct sampled
//! elements, scans the probes in order until one lies inside `Q`, and then
//! resolves the bucket of that probe:
//!
//! - [`QueryVariant::UjCertify`]: for each candidate `j`, draw elements of `Q`
//!   without replacement until one falls outside `T_j` (reject) or
//!   `⌈C_query·ln n / ε⌉` have landed inside (accept).
//! - [`QueryVariant::BucketEliminate`]: run [`eliminate`] on the bucket.
//!
//! If a bucket yields nothing the scan moves on to the next contained probe.
//!
//! Buckets are built by intersecting per-element membership columns, so
//! preprocessing costs `O(L·ℓ·k/64)` word operations. Preprocessing is
//! unmetered; only query-time membership reads are counted.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distributions::{OpCounter, QueryMultiset};
use crate::elimination::{eliminate, CandidateSet, EliminationOutcome};
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Constant in `L = C·(2/(1 − e^{−2/s}))^ℓ`.
pub const DEFAULT_C: f64 = 5.0;
/// Constant in `|U_j| = C_query·ln n / ε`.
pub const DEFAULT_C_QUERY: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryVariant {
    UjCertify,
    BucketEliminate,
}

impl std::fmt::Display for QueryVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QueryVariant::UjCertify => "uj-certify",
            QueryVariant::BucketEliminate => "bucket-eliminate",
        })
    }
}

impl std::str::FromStr for QueryVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uj-certify" => Ok(QueryVariant::UjCertify),
            "bucket-eliminate" => Ok(QueryVariant::BucketEliminate),
            _ => Err(Error::domain(format!(
                "unknown query variant {s:?} (expected uj-certify or bucket-eliminate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    /// Number of probe sets `L`.
    pub num_probes: usize,
    /// Probe size `ℓ`.
    pub probe_size: usize,
    pub c_query: f64,
    pub variant: QueryVariant,
}

impl IndexParams {
    pub fn new(num_probes: usize, probe_size: usize) -> Self {
        IndexParams {
            num_probes,
            probe_size,
            c_query: DEFAULT_C_QUERY,
            variant: QueryVariant::BucketEliminate,
        }
    }

    pub fn with_variant(mut self, variant: QueryVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_c_query(mut self, c_query: f64) -> Self {
        self.c_query = c_query;
        self
    }

    /// Number of certification samples `⌈C_query·ln n / ε⌉`.
    pub fn certify_size(&self, n: usize, epsilon: f64) -> usize {
        (self.c_query * (n as f64).ln() / epsilon).ceil() as usize
    }
}

/// Parameters derived from a target space exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalParams {
    pub params: IndexParams,
    pub c: f64,
    /// `2/(1 − e^{−2/s})`.
    pub base: f64,
    /// `1 + ρ_u·log(1 − ε/2)/log(base)`.
    pub predicted_rho_q: f64,
    /// Set when `ℓ` had to be raised to 1.
    pub clamped: bool,
}

/// Probe base `2/(1 − e^{−2/s})`: the inverse of the chance that a random
/// element lands in `Q` for a size-`n/2` support sampled `n/s` times.
pub fn probe_base(s: f64) -> f64 {
    2.0 / -(-2.0 / s).exp_m1()
}

/// `L = k^{ρ_u}` and `ℓ` chosen so that `L = C·base^ℓ`.
///
/// `L` is computed from the unclamped `ℓ`; when that is below 1 the probe
/// size is raised to 1 and `clamped` is set.
pub fn theoretical_params(
    rho_u: f64,
    s: f64,
    k: usize,
    epsilon: f64,
    c: f64,
) -> Result<TheoreticalParams> {
    if !(rho_u >= 0.0) || !(s >= 2.0) || k < 2 {
        return Err(Error::domain(format!(
            "need rho_u >= 0, s >= 2, k >= 2 (got rho_u={rho_u}, s={s}, k={k})"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 2.0) || !(c > 0.0) {
        return Err(Error::domain(format!(
            "need 0 < epsilon <= 2 and C > 0 (got {epsilon}, {c})"
        )));
    }
    let base = probe_base(s);
    let raw = (rho_u * (k as f64).ln() / base.ln()).floor();
    let num_probes = (c * base.powf(raw)).ceil() as usize;
    let clamped = raw < 1.0;
    let probe_size = if clamped { 1 } else { raw as usize };
    if clamped {
        log::warn!("theoretical probe size {raw} < 1 for rho_u={rho_u}, s={s}, k={k}; using 1");
    }
    Ok(TheoreticalParams {
        params: IndexParams::new(num_probes, probe_size).with_variant(QueryVariant::UjCertify),
        c,
        base,
        predicted_rho_q: 1.0 + rho_u * (1.0 - epsilon / 2.0).ln() / base.ln(),
        clamped,
    })
}

/// Per-element membership bitmaps over the `k` distributions.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    words_per_column: usize,
    k: usize,
    bits: Vec<u64>,
}

impl ColumnIndex {
    pub fn new(data: &Dataset) -> Self {
        let k = data.len();
        let wpc = k.div_ceil(64);
        let mut bits = vec![0u64; wpc * data.domain()];
        for (j, s) in data.supports().iter().enumerate() {
            for e in s.iter() {
                bits[e as usize * wpc + j / 64] |= 1 << (j % 64);
            }
        }
        ColumnIndex {
            words_per_column: wpc,
            k,
            bits,
        }
    }

    fn column(&self, e: u32) -> &[u64] {
        let start = e as usize * self.words_per_column;
        &self.bits[start..start + self.words_per_column]
    }

    fn intersect(&self, probe: &[u32]) -> Vec<u64> {
        let mut acc = vec![!0u64; self.words_per_column];
        if !self.k.is_multiple_of(64) {
            if let Some(last) = acc.last_mut() {
                *last = (1u64 << (self.k % 64)) - 1;
            }
        }
        for &e in probe {
            for (a, c) in acc.iter_mut().zip(self.column(e)) {
                *a &= c;
            }
        }
        acc
    }
}

/// A bucket stored as a sorted id list or a bitmap, whichever is smaller.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Bucket {
    List(Vec<u32>),
    Bitmap { words: Vec<u64>, len: usize },
}

impl Bucket {
    fn from_bitmap(words: Vec<u64>) -> Self {
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        if len * 4 < words.len() * 8 {
            Bucket::List(iter_bits(&words).collect())
        } else {
            Bucket::Bitmap { words, len }
        }
    }

    fn len(&self) -> usize {
        match self {
            Bucket::List(v) => v.len(),
            Bucket::Bitmap { len, .. } => *len,
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = u32> + '_> {
        match self {
            Bucket::List(v) => Box::new(v.iter().copied()),
            Bucket::Bitmap { words, .. } => Box::new(iter_bits(words)),
        }
    }
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = u32> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros();
            rest &= rest - 1;
            Some(w as u32 * 64 + b)
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetOutcome {
    Found(usize),
    NotFound,
}

#[derive(Debug, Clone)]
pub struct SubsetIndex {
    data: Arc<Dataset>,
    params: IndexParams,
    seed: u64,
    /// `L·ℓ` probe elements, each probe sorted.
    probes: Vec<u32>,
    /// Bucket slot of each probe; repeated probes share a slot.
    slot_of: Vec<u32>,
    buckets: Vec<Bucket>,
    lookup: HashMap<Box<[u32]>, u32>,
}

impl SubsetIndex {
    pub fn preprocess(data: Arc<Dataset>, params: IndexParams, seed: u64) -> Result<Self> {
        let cols = ColumnIndex::new(&data);
        Self::preprocess_with(data, &cols, params, seed)
    }

    /// Builds the index reusing precomputed membership columns for `data`.
    pub fn preprocess_with(
        data: Arc<Dataset>,
        cols: &ColumnIndex,
        params: IndexParams,
        seed: u64,
    ) -> Result<Self> {
        let (n, ell) = (data.domain(), params.probe_size);
        if ell > n {
            return Err(Error::domain(format!(
                "probe size {ell} exceeds domain size {n}"
            )));
        }
        if cols.k != data.len() || cols.bits.len() != cols.words_per_column * n {
            return Err(Error::domain(
                "column index was built for a different dataset",
            ));
        }
        let probes: Vec<u32> = (0..params.num_probes)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut r = rng::stream(seed, &[tag::PROBE, i as u64]);
                let mut p: Vec<u32> = index::sample(&mut r, n, ell)
                    .iter()
                    .map(|e| e as u32)
                    .collect();
                p.sort_unstable();
                p
            })
            .collect();

        let mut lookup: HashMap<Box<[u32]>, u32> = HashMap::new();
        let mut distinct: Vec<usize> = Vec::new();
        let slot_of = (0..params.num_probes)
            .map(|i| {
                let key = &probes[i * ell..(i + 1) * ell];
                *lookup.entry(key.into()).or_insert_with(|| {
                    distinct.push(i);
                    distinct.len() as u32 - 1
                })
            })
            .collect();
        let buckets = distinct
            .par_iter()
            .map(|&i| Bucket::from_bitmap(cols.intersect(&probes[i * ell..(i + 1) * ell])))
            .collect();

        Ok(SubsetIndex {
            data,
            params,
            seed,
            probes,
            slot_of,
            buckets,
            lookup,
        })
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn num_probes(&self) -> usize {
        self.params.num_probes
    }

    pub fn probe(&self, i: usize) -> &[u32] {
        let ell = self.params.probe_size;
        &self.probes[i * ell..(i + 1) * ell]
    }

    pub fn bucket(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        self.buckets[self.slot_of[i] as usize].iter()
    }

    pub fn bucket_len(&self, i: usize) -> usize {
        self.buckets[self.slot_of[i] as usize].len()
    }

    /// Dictionary lookup by probe contents (any element order).
    pub fn lookup(&self, probe: &[u32]) -> Option<Vec<u32>> {
        let mut key = probe.to_vec();
        key.sort_unstable();
        self.lookup
            .get(key.as_slice())
            .map(|&slot| self.buckets[slot as usize].iter().collect())
    }

    pub fn query<R: Rng + ?Sized>(
        &self,
        q: &QueryMultiset,
        epsilon: f64,
        ctr: &mut OpCounter,
        rng: &mut R,
    ) -> Result<SubsetOutcome> {
        if q.domain() != self.data.domain() {
            return Err(Error::domain(format!(
                "query domain {} differs from indexed domain {}",
                q.domain(),
                self.data.domain()
            )));
        }
        if self.params.variant == QueryVariant::UjCertify && !(epsilon > 0.0) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let distinct = q.distinct();
        // Pool for sampling U_j without replacement; reused across candidates.
        let mut pool: Vec<u32> = Vec::new();
        for i in 0..self.num_probes() {
            let mut inside = true;
            for &e in self.probe(i) {
                if !distinct.contains(e, ctr)? {
                    inside = false;
                    break;
                }
            }
            if !inside {
                continue;
            }
            let found = match self.params.variant {
                QueryVariant::BucketEliminate => {
                    let cands = CandidateSet::from_bucket(self.data.len(), self.bucket(i))?;
                    match eliminate(&self.data, cands, q, ctr)? {
                        EliminationOutcome::Found(j) => Some(j),
                        _ => None,
                    }
                }
                QueryVariant::UjCertify => {
                    if pool.is_empty() {
                        pool = distinct.to_vec();
                    }
                    let target = self
                        .params
                        .certify_size(self.data.domain(), epsilon)
                        .min(pool.len());
                    self.certify(i, &mut pool, target, ctr, rng)?
                }
            };
            if let Some(j) = found {
                return Ok(SubsetOutcome::Found(j));
            }
        }
        Ok(SubsetOutcome::NotFound)
    }

    fn certify<R: Rng + ?Sized>(
        &self,
        probe: usize,
        pool: &mut [u32],
        target: usize,
        ctr: &mut OpCounter,
        rng: &mut R,
    ) -> Result<Option<usize>> {
        'candidates: for j in self.bucket(probe) {
            let support = self.data.support(j as usize);
            for t in 0..target {
                let pick = rng.random_range(t..pool.len());
                pool.swap(t, pick);
                if !support.contains(pool[t], ctr)? {
                    continue 'candidates;
                }
            }
            return Ok(Some(j as usize));
        }
        Ok(None)
    }

    /// One line per probe: `probe: e1 … eℓ | bucket: j1 j2 …`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.num_probes() {
            out.push_str("probe:");
            for e in self.probe(i) {
                let _ = write!(out, " {e}");
            }
            out.push_str(" | bucket:");
            for j in self.bucket(i) {
                let _ = write!(out, " {j}");
            }
            out.push('\n');
        }
        out
    }
}
