//! Parameter sweeps comparing the subset index with Elimination.
//!
//! Every sweep point regenerates a random half-uniform dataset and a fixed
//! set of realizable queries. Elimination runs once on the full dataset. The
//! subset index runs an adaptive search over the number of probes `L`: start
//! at `l_init`, multiply by `l_factor` (rounding up) and stop at the first
//! `L` that answers every query correctly. Each step re-randomizes the probes
//! but reuses the same queries.
//!
//! Operation counts are deterministic under the seed; wall times are not.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distributions::{OpCounter, QueryMultiset};
use crate::elimination::{eliminate, CandidateSet, EliminationOutcome};
use crate::instance_gen::{draw_query, random_half_dataset};
use crate::rng::{self, tag};
use crate::subset_index::{
    ColumnIndex, IndexParams, QueryVariant, SubsetIndex, SubsetOutcome, DEFAULT_C_QUERY,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "algorithm,k,n,S,ell,L,accuracy,mean_ops,mean_time_ns,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "k")]
    K,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "S", alias = "s")]
    S,
    #[serde(rename = "ell", alias = "l")]
    Ell,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::K => "k",
            SweepParam::N => "n",
            SweepParam::S => "S",
            SweepParam::Ell => "ell",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepParam::K),
            "n" => Ok(SweepParam::N),
            "S" | "s" => Ok(SweepParam::S),
            "ell" | "l" => Ok(SweepParam::Ell),
            _ => Err(Error::domain(format!(
                "unknown sweep parameter {s:?} (expected k, n, S or ell)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep_param: SweepParam,
    pub sweep_values: Vec<usize>,
    pub k: usize,
    pub n: usize,
    #[serde(rename = "S")]
    pub samples: usize,
    pub ell: usize,
    pub queries_per_point: usize,
    pub l_init: usize,
    pub l_factor: f64,
    pub l_cap: usize,
    pub seed: u64,
    pub variant: QueryVariant,
    /// Only used by the `uj-certify` variant.
    pub epsilon: f64,
    pub c_query: f64,
    /// Multiplies every `k`, swept or default.
    pub scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sweep_param: SweepParam::K,
            sweep_values: vec![50_000],
            k: 50_000,
            n: 500,
            samples: 50,
            ell: 3,
            queries_per_point: 100,
            l_init: 200,
            l_factor: 1.5,
            l_cap: 10_000_000,
            seed: 0,
            variant: QueryVariant::BucketEliminate,
            epsilon: 0.5,
            c_query: DEFAULT_C_QUERY,
            scale: 1.0,
        }
    }
}

/// Fully resolved parameters of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointParams {
    pub k: usize,
    pub n: usize,
    pub samples: usize,
    pub ell: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("n", self.n),
            ("S", self.samples),
            ("queries_per_point", self.queries_per_point),
            ("l_init", self.l_init),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::domain(format!("{name} must be positive")));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::domain("sweep values must be nonempty"));
        }
        if !(self.l_factor > 1.0) {
            return Err(Error::domain(format!(
                "l_factor must exceed 1, got {}",
                self.l_factor
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::domain(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn point(&self, value: usize) -> PointParams {
        let mut p = PointParams {
            k: self.k,
            n: self.n,
            samples: self.samples,
            ell: self.ell,
        };
        match self.sweep_param {
            SweepParam::K => p.k = value,
            SweepParam::N => p.n = value,
            SweepParam::S => p.samples = value,
            SweepParam::Ell => p.ell = value,
        }
        p.k = ((p.k as f64 * self.scale).round() as usize).max(1);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Subset,
    Elimination,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Subset => "subset",
            Algorithm::Elimination => "elimination",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset" => Ok(Algorithm::Subset),
            "elimination" => Ok(Algorithm::Elimination),
            _ => Err(Error::domain(format!(
                "unknown algorithm {s:?} (expected subset or elimination)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub params: PointParams,
    /// Number of probes; `None` for Elimination.
    pub num_probes: Option<usize>,
    pub accuracy: f64,
    pub mean_ops: f64,
    pub mean_time_ns: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{:.1},{}",
            self.algorithm,
            p.k,
            p.n,
            p.samples,
            p.ell,
            self.num_probes.map(|l| l.to_string()).unwrap_or_default(),
            self.accuracy,
            self.mean_ops,
            self.mean_time_ns,
            self.seed
        )
    }
}

pub fn write_csv(path: &Path, rows: &[ResultRow], metadata: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for m in metadata {
        text.push_str(&format!("# {m}\n"));
    }
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.csv_line());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Accuracy and cost of one algorithm over a query set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub correct: usize,
    pub total: usize,
    pub ops: u64,
    pub time_ns: u128,
}

impl Metrics {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn mean_ops(&self) -> f64 {
        self.ops as f64 / self.total as f64
    }

    pub fn mean_time_ns(&self) -> f64 {
        self.time_ns as f64 / self.total as f64
    }

    fn from_runs(runs: &[(bool, u64, u128)]) -> Self {
        Metrics {
            correct: runs.iter().filter(|r| r.0).count(),
            total: runs.len(),
            ops: runs.iter().map(|r| r.1).sum(),
            time_ns: runs.iter().map(|r| r.2).sum(),
        }
    }
}

/// `(truth, query)` pairs.
pub type QuerySet = Vec<(usize, QueryMultiset)>;

pub fn make_queries(data: &Dataset, samples: usize, count: usize, seed: u64) -> Result<QuerySet> {
    (0..count as u64)
        .into_par_iter()
        .map(|qi| draw_query(data, samples, seed, &[tag::QUERY, qi]))
        .collect()
}

pub fn run_elimination(data: &Dataset, queries: &QuerySet) -> Result<Metrics> {
    let runs = queries
        .par_iter()
        .map(|(truth, q)| {
            let mut ctr = OpCounter::new();
            let start = Instant::now();
            let out = eliminate(data, CandidateSet::full(data.len()), q, &mut ctr)?;
            let elapsed = start.elapsed().as_nanos();
            Ok((
                out == EliminationOutcome::Found(*truth),
                ctr.membership_ops,
                elapsed,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_runs(&runs))
}

/// Runs every query against `index`. Query `qi` draws its certification
/// randomness from the stream `(seed, [CERTIFY, qi])`.
pub fn run_subset(
    index: &SubsetIndex,
    queries: &QuerySet,
    epsilon: f64,
    seed: u64,
) -> Result<Metrics> {
    let runs = queries
        .par_iter()
        .enumerate()
        .map(|(qi, (truth, q))| {
            let mut r = rng::stream(seed, &[tag::CERTIFY, qi as u64]);
            let mut ctr = OpCounter::new();
            let start = Instant::now();
            let out = index.query(q, epsilon, &mut ctr, &mut r)?;
            let elapsed = start.elapsed().as_nanos();
            Ok((
                out == SubsetOutcome::Found(*truth),
                ctr.membership_ops,
                elapsed,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_runs(&runs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub ell: usize,
    pub l_init: usize,
    pub l_factor: f64,
    pub l_cap: usize,
    pub variant: QueryVariant,
    pub epsilon: f64,
    pub c_query: f64,
}

impl AdaptiveOptions {
    pub fn from_config(cfg: &ExperimentConfig, ell: usize) -> Self {
        AdaptiveOptions {
            ell,
            l_init: cfg.l_init,
            l_factor: cfg.l_factor,
            l_cap: cfg.l_cap,
            variant: cfg.variant,
            epsilon: cfg.epsilon,
            c_query: cfg.c_query,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    pub num_probes: usize,
    pub metrics: Metrics,
    /// `(L, accuracy)` for every tested `L`.
    pub trace: Vec<(usize, f64)>,
}

/// Smallest tested `L` at which the subset index answers all queries.
pub fn adaptive_l_search(
    data: &Arc<Dataset>,
    queries: &QuerySet,
    opts: &AdaptiveOptions,
    seed: u64,
) -> Result<AdaptiveResult> {
    let cols = ColumnIndex::new(data);
    let mut trace = Vec::new();
    let mut l = opts.l_init;
    let mut step = 0u64;
    while l <= opts.l_cap {
        let params = IndexParams::new(l, opts.ell)
            .with_variant(opts.variant)
            .with_c_query(opts.c_query);
        let step_seed = rng::derive_seed(seed, &[tag::ADAPTIVE_STEP, step]);
        let index = SubsetIndex::preprocess_with(Arc::clone(data), &cols, params, step_seed)?;
        let metrics = run_subset(&index, queries, opts.epsilon, step_seed)?;
        log::debug!(
            "L = {l}: accuracy {:.2}, mean ops {:.1}",
            metrics.accuracy(),
            metrics.mean_ops()
        );
        trace.push((l, metrics.accuracy()));
        if metrics.correct == metrics.total {
            return Ok(AdaptiveResult {
                num_probes: l,
                metrics,
                trace,
            });
        }
        l = (l as f64 * opts.l_factor).ceil() as usize;
        step += 1;
    }
    let trace_text: Vec<String> = trace
        .iter()
        .map(|(l, a)| format!("L={l}: {a:.2}"))
        .collect();
    Err(Error::SearchAborted(format!(
        "no L <= {} reached full accuracy; trace [{}]",
        opts.l_cap,
        trace_text.join(", ")
    )))
}

/// Elimination and subset rows for one point.
pub fn run_point(
    p: PointParams,
    cfg: &ExperimentConfig,
    point_seed: u64,
) -> Result<Vec<ResultRow>> {
    let data = Arc::new(random_half_dataset(p.n, p.k, point_seed)?);
    let queries = make_queries(&data, p.samples, cfg.queries_per_point, point_seed)?;
    let elim = run_elimination(&data, &queries)?;
    let adaptive = adaptive_l_search(
        &data,
        &queries,
        &AdaptiveOptions::from_config(cfg, p.ell),
        point_seed,
    )?;
    let row = |algorithm, num_probes, m: Metrics| ResultRow {
        algorithm,
        params: p,
        num_probes,
        accuracy: m.accuracy(),
        mean_ops: m.mean_ops(),
        mean_time_ns: m.mean_time_ns(),
        seed: cfg.seed,
    };
    Ok(vec![
        row(
            Algorithm::Subset,
            Some(adaptive.num_probes),
            adaptive.metrics,
        ),
        row(Algorithm::Elimination, None, elim),
    ])
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (idx, &value) in cfg.sweep_values.iter().enumerate() {
        let p = cfg.point(value);
        log::info!(
            "sweep point {}={value}: k={} n={} S={} ell={}",
            cfg.sweep_param,
            p.k,
            p.n,
            p.samples,
            p.ell
        );
        let point_seed = rng::derive_seed(cfg.seed, &[tag::BENCH_POINT, idx as u64]);
        let point_rows = run_point(p, cfg, point_seed).map_err(|e| match e {
            Error::SearchAborted(msg) => {
                Error::SearchAborted(format!("sweep point {}={value}: {msg}", cfg.sweep_param))
            }
            other => other,
        })?;
        rows.extend(point_rows);
    }
    Ok(rows)
}
