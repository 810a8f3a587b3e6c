//! Seeded problem instances.
//!
//! Three families are generated:
//!
//! - **HUDE**: `k` supports of size exactly `n/2`, a truth index, and
//!   `⌊n/s⌋` samples from the truth. The separation promise
//!   `‖p_truth − p_j‖₁ ≥ ε` is checked against the truth only.
//! - **URDE**: supports include each element independently with probability
//!   `w_u`; the query has `Poi(|supp(p*)| / (s·w_u))` samples.
//! - **GapSS**: binary vectors with `Bern(w_u)` coordinates, and a query
//!   vector that is a random subset of the truth, drawn coordinatewise from
//!   `[[w_q, 0], [w_u − w_q, 1 − w_u]]`.
//!
//! [`reduce_gapss_to_urde`] turns a GapSS instance into a URDE instance by
//! adding `Poi₊(1/(s·w_u))` copies of every query coordinate.
//!
//! All generators are pure functions of their parameters and seed.

mod poisson;
mod sidecar;

pub use poisson::{poisson, poisson_plus, poisson_pmf};
pub use sidecar::{load_instance, write_instance, InstanceSidecar, Problem};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distributions::{support_l1, HalfUniformDistribution, QueryMultiset, SupportSet};
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Resamples of the dataset allowed after the first HUDE attempt.
pub const HUDE_MAX_RETRIES: u64 = 10;
const URDE_MAX_TRUTH_RESAMPLES: u64 = 1000;
const REDUCTION_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HudeInstance {
    pub dataset: Dataset,
    pub epsilon: f64,
    pub s: f64,
    pub truth_index: usize,
    pub query: QueryMultiset,
    /// Dataset resamples needed before the promise held.
    pub retries: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrdeInstance {
    pub dataset: Dataset,
    pub w_u: f64,
    pub s: f64,
    pub truth_index: usize,
    pub query: QueryMultiset,
    /// Mean of the Poisson that produced `query.total()`.
    pub query_mean: f64,
    pub truth_resamples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapssInstance {
    pub dataset: Dataset,
    pub w_u: f64,
    pub w_q: f64,
    pub truth_index: usize,
    pub query: SupportSet,
    pub seed: u64,
}

/// Number of samples `⌊n/s⌋`, tolerant of `n/s` landing a rounding error
/// below an integer.
pub fn sample_count(n: usize, s: f64) -> usize {
    let x = n as f64 / s;
    (x * (1.0 + 1e-12)).floor() as usize
}

/// `k` supports of size `n/2`, each drawn uniformly from its own stream.
pub fn random_half_dataset(n: usize, k: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "half-uniform supports need even n >= 2, got {n}"
        )));
    }
    let supports = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::stream(seed, &[tag::DATASET, j as u64]);
            let picks = index::sample(&mut r, n, n / 2);
            let mut s = SupportSet::empty(n);
            for e in picks.iter() {
                s.insert(e as u32);
            }
            s
        })
        .collect();
    Dataset::new(n, supports)
}

/// Samples a realizable query: picks the truth uniformly and draws `m`
/// samples from it.
pub fn draw_query(
    data: &Dataset,
    m: usize,
    seed: u64,
    path: &[u64],
) -> Result<(usize, QueryMultiset)> {
    let mut r = rng::stream(seed, path);
    let truth = r.random_range(0..data.len());
    let q = data.distribution(truth).sample(m, &mut r)?;
    Ok((truth, q))
}

pub fn gen_hude(n: usize, k: usize, epsilon: f64, s: f64, seed: u64) -> Result<HudeInstance> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::domain(format!(
            "epsilon must lie in (0, 2], got {epsilon}"
        )));
    }
    if !(s > 0.0) {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    let m = sample_count(n, s);
    if m == 0 {
        return Err(Error::domain(format!(
            "n/s = {} gives no samples",
            n as f64 / s
        )));
    }
    let mut violation = None;
    for attempt in 0..=HUDE_MAX_RETRIES {
        let attempt_seed = rng::derive_seed(seed, &[attempt]);
        let dataset = random_half_dataset(n, k, attempt_seed)?;
        let truth = rng::stream(attempt_seed, &[tag::TRUTH]).random_range(0..k);
        let t = dataset.support(truth);
        let bad = (0..k)
            .into_par_iter()
            .filter(|&j| j != truth)
            .map(|j| {
                (
                    j,
                    support_l1(t, dataset.support(j)).expect("nonempty supports"),
                )
            })
            .find_first(|&(_, d)| d < epsilon - 1e-12);
        if let Some((j, d)) = bad {
            log::debug!("HUDE attempt {attempt}: pair ({truth}, {j}) at distance {d} < {epsilon}");
            violation = Some((truth, j, d));
            continue;
        }
        let mut r = rng::stream(attempt_seed, &[tag::QUERY]);
        let query = dataset.distribution(truth).sample(m, &mut r)?;
        return Ok(HudeInstance {
            dataset,
            epsilon,
            s,
            truth_index: truth,
            query,
            retries: attempt,
            seed,
        });
    }
    let (i, j, d) = violation.expect("loop only exits early on success");
    Err(Error::Generation(format!(
        "separation promise violated after {} attempts: ‖p_{i} − p_{j}‖₁ = {d} < ε = {epsilon}",
        HUDE_MAX_RETRIES + 1
    )))
}

fn bernoulli_support(n: usize, w: f64, r: &mut impl Rng) -> SupportSet {
    let mut s = SupportSet::empty(n);
    for e in 0..n as u32 {
        if r.random::<f64>() < w {
            s.insert(e);
        }
    }
    s
}

fn bernoulli_dataset(n: usize, k: usize, w: f64, seed: u64) -> Result<Dataset> {
    let supports = (0..k)
        .into_par_iter()
        .map(|j| bernoulli_support(n, w, &mut rng::stream(seed, &[tag::DATASET, j as u64])))
        .collect();
    Dataset::new(n, supports)
}

pub fn gen_urde(n: usize, k: usize, w_u: f64, s: f64, seed: u64) -> Result<UrdeInstance> {
    if k == 0 || n == 0 {
        return Err(Error::domain("n and k must be positive"));
    }
    if !(w_u > 0.0 && w_u <= 1.0) {
        return Err(Error::domain(format!("w_u must lie in (0, 1], got {w_u}")));
    }
    if !(s > 0.0) {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    let mut dataset = bernoulli_dataset(n, k, w_u, seed)?;
    let truth = rng::stream(seed, &[tag::TRUTH]).random_range(0..k);
    let mut truth_resamples = 0;
    while dataset.support(truth).is_empty() {
        truth_resamples += 1;
        if truth_resamples > URDE_MAX_TRUTH_RESAMPLES {
            return Err(Error::Generation(format!(
                "truth support stayed empty after {URDE_MAX_TRUTH_RESAMPLES} resamples"
            )));
        }
        let mut r = rng::stream(seed, &[tag::DATASET, truth as u64, truth_resamples]);
        dataset.replace(truth, bernoulli_support(n, w_u, &mut r));
    }
    let p = dataset.distribution(truth);
    let query_mean = p.support().len() as f64 / (s * w_u);
    let mut r = rng::stream(seed, &[tag::QUERY]);
    let total = poisson(query_mean, &mut r)? as usize;
    let query = p.sample(total, &mut r)?;
    Ok(UrdeInstance {
        dataset,
        w_u,
        s,
        truth_index: truth,
        query,
        query_mean,
        truth_resamples,
        seed,
    })
}

pub fn gen_gapss(n: usize, k: usize, w_u: f64, w_q: f64, seed: u64) -> Result<GapssInstance> {
    if k == 0 || n == 0 {
        return Err(Error::domain("n and k must be positive"));
    }
    if !(0.0 < w_q && w_q < w_u && w_u < 1.0) {
        return Err(Error::domain(format!(
            "need 0 < w_q < w_u < 1, got w_q = {w_q}, w_u = {w_u}"
        )));
    }
    let mut dataset = bernoulli_dataset(n, k, w_u, seed)?;
    let truth = rng::stream(seed, &[tag::TRUTH]).random_range(0..k);
    let mut r = rng::stream(seed, &[tag::GAPSS_QUERY]);
    let mut truth_vec = SupportSet::empty(n);
    let mut query = SupportSet::empty(n);
    for e in 0..n as u32 {
        let u: f64 = r.random();
        if u < w_q {
            truth_vec.insert(e);
            query.insert(e);
        } else if u < w_u {
            truth_vec.insert(e);
        }
    }
    dataset.replace(truth, truth_vec);
    Ok(GapssInstance {
        dataset,
        w_u,
        w_q,
        truth_index: truth,
        query,
        seed,
    })
}

/// The GapSS query density matched by a URDE sample rate:
/// `w_q = w_u·(1 − e^{−1/(s·w_u)})`.
pub fn reduction_w_q(w_u: f64, s: f64) -> f64 {
    -w_u * (-1.0 / (s * w_u)).exp_m1()
}

/// Inverse of [`reduction_w_q`]: `s = −1 / (w_u·log(1 − w_q/w_u))`.
pub fn reduction_s(w_u: f64, w_q: f64) -> f64 {
    -1.0 / (w_u * (-w_q / w_u).ln_1p())
}

pub fn reduce_gapss_to_urde(g: &GapssInstance, s: f64, seed: u64) -> Result<UrdeInstance> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    let required = reduction_w_q(g.w_u, s);
    if (g.w_q - required).abs() > REDUCTION_REL_TOL * required {
        return Err(Error::domain(format!(
            "reduction needs w_q = w_u(1 − e^(−1/(s·w_u))): instance has w_q = {}, s = {s} requires {required}",
            g.w_q
        )));
    }
    let lambda = 1.0 / (s * g.w_u);
    let mut r = rng::stream(seed, &[tag::REDUCTION]);
    let mut draws = Vec::new();
    for e in g.query.iter() {
        let copies = poisson_plus(lambda, &mut r)?;
        draws.extend(std::iter::repeat_n(e, copies as usize));
    }
    // A uniformly shuffled stream is distributed like i.i.d. draws.
    draws.shuffle(&mut r);
    let truth_support = g.dataset.support(g.truth_index).len();
    Ok(UrdeInstance {
        dataset: g.dataset.clone(),
        w_u: g.w_u,
        s,
        truth_index: g.truth_index,
        query: QueryMultiset::from_draws(g.dataset.domain(), draws)?,
        query_mean: truth_support as f64 * lambda,
        truth_resamples: 0,
        seed,
    })
}

impl HudeInstance {
    pub fn truth(&self) -> HalfUniformDistribution {
        self.dataset.distribution(self.truth_index)
    }
}
