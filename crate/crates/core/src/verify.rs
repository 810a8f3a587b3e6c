//! Self-checks runnable from the command line.
//!
//! Each check is a fast randomized or exhaustive test of one invariant of the
//! library. Checks are grouped into suites; `all` runs every suite.

use std::sync::Arc;

use crate::bench::{adaptive_l_search, make_queries, AdaptiveOptions, ExperimentConfig};
use crate::distributions::{support_l1, OpCounter, SupportSet};
use crate::elimination::{eliminate, CandidateSet, EliminationOutcome};
use crate::instance_gen::{
    gen_gapss, gen_hude, poisson_plus, random_half_dataset, reduce_gapss_to_urde, reduction_s,
    reduction_w_q,
};
use crate::lower_bound::{
    emit_tradeoff, entropy_h, inf_f, kl_binary, objective_f, objective_f_definitional,
    upper_bound_exponent, CouplingPoint, Curve, InfOptions, KlParams, TradeoffOptions,
};
use crate::rng::{self, tag};
use crate::subset_index::{IndexParams, SubsetIndex};
use crate::{Error, Result};
use rand::Rng;

pub const SUITES: [&str; 5] = [
    "distributions",
    "instances",
    "index",
    "lower-bound",
    "bench",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

fn checks() -> Vec<(&'static str, &'static str, Check)> {
    vec![
        (
            "distributions",
            "l1-matches-coordinatewise",
            l1_matches_coordinatewise,
        ),
        (
            "distributions",
            "multiset-consistency",
            multiset_consistency,
        ),
        ("instances", "poisson-plus-positive", poisson_plus_positive),
        ("instances", "hude-promise-holds", hude_promise_holds),
        (
            "instances",
            "reduction-preserves-structure",
            reduction_preserves_structure,
        ),
        (
            "index",
            "buckets-match-brute-force",
            buckets_match_brute_force,
        ),
        ("index", "elimination-keeps-truth", elimination_keeps_truth),
        ("index", "thread-count-invariance", thread_count_invariance),
        (
            "lower-bound",
            "objective-codings-agree",
            objective_codings_agree,
        ),
        ("lower-bound", "entropy-bounds", entropy_bounds),
        ("lower-bound", "infimum-lemma-bound", infimum_lemma_bound),
        ("lower-bound", "curve-ordering", curve_ordering),
        (
            "lower-bound",
            "upper-exact-below-simplified",
            upper_exact_below_simplified,
        ),
        ("bench", "adaptive-ell-one", adaptive_ell_one),
    ]
}

/// Runs the named suite, or every suite for `all`.
pub fn run_suite(suite: &str) -> Result<Vec<CheckOutcome>> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(Error::domain(format!(
            "unknown suite {suite:?} (expected all or one of {})",
            SUITES.join(", ")
        )));
    }
    Ok(checks()
        .into_iter()
        .filter(|(s, _, _)| suite == "all" || *s == suite)
        .map(|(suite, name, f)| {
            let (passed, detail) = match f() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                suite,
                name,
                passed,
                detail,
            }
        })
        .collect())
}

fn l1_matches_coordinatewise() -> Result<(bool, String)> {
    let mut r = rng::stream(11, &[]);
    let n = 64;
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let a = SupportSet::from_elements(n, (0..n as u32).filter(|_| r.random_bool(0.5)))?;
        let b = SupportSet::from_elements(n, (0..n as u32).filter(|_| r.random_bool(0.5)))?;
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let brute: f64 = (0..n as u32)
            .map(|i| {
                let pa = if a.get(i) { 1.0 / a.len() as f64 } else { 0.0 };
                let pb = if b.get(i) { 1.0 / b.len() as f64 } else { 0.0 };
                (pa - pb).abs()
            })
            .sum();
        worst = worst.max((support_l1(&a, &b)? - brute).abs());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn multiset_consistency() -> Result<(bool, String)> {
    let data = random_half_dataset(200, 50, 12)?;
    for j in 0..data.len() {
        let mut r = rng::stream(12, &[tag::QUERY, j as u64]);
        let q = data.distribution(j).sample(40, &mut r)?;
        let sum: u32 = q.counts().values().sum();
        let ok = sum as usize == q.total()
            && q.counts()
                .keys()
                .all(|&e| q.distinct().get(e) && data.support(j).get(e))
            && q.distinct().len() == q.counts().len();
        if !ok {
            return Ok((false, format!("inconsistent multiset for distribution {j}")));
        }
    }
    Ok((true, "50 queries consistent".into()))
}

fn poisson_plus_positive() -> Result<(bool, String)> {
    let mut r = rng::stream(13, &[]);
    let mut ones = 0u64;
    let trials = 200_000;
    for _ in 0..trials {
        let x = poisson_plus(0.04, &mut r)?;
        if x == 0 {
            return Ok((false, "drew 0".into()));
        }
        ones += u64::from(x == 1);
    }
    let p = ones as f64 / trials as f64;
    let expect = 0.04 * (-0.04f64).exp() / (1.0 - (-0.04f64).exp());
    let se = (expect * (1.0 - expect) / trials as f64).sqrt();
    Ok((
        (p - expect).abs() < 4.0 * se,
        format!("P[X=1] = {p:.5}, expected {expect:.5}"),
    ))
}

fn hude_promise_holds() -> Result<(bool, String)> {
    let inst = gen_hude(500, 500, 0.5, 10.0, 14)?;
    let truth = inst.dataset.support(inst.truth_index);
    let mut closest = f64::INFINITY;
    for j in 0..inst.dataset.len() {
        if j != inst.truth_index {
            closest = closest.min(support_l1(truth, inst.dataset.support(j))?);
        }
    }
    Ok((closest >= 0.5, format!("closest distance {closest:.4}")))
}

fn reduction_preserves_structure() -> Result<(bool, String)> {
    let s = 20.0;
    let w_q = reduction_w_q(0.5, s);
    let ok_map = (reduction_s(0.5, w_q) - s).abs() < 1e-9 * s;
    let g = gen_gapss(300, 40, 0.5, w_q, 15)?;
    let u = reduce_gapss_to_urde(&g, s, 15)?;
    let same_data = u.dataset == g.dataset;
    let same_distinct = u.query.distinct() == &g.query;
    Ok((
        ok_map && same_data && same_distinct,
        format!("mapping {ok_map}, dataset {same_data}, distinct query {same_distinct}"),
    ))
}

fn buckets_match_brute_force() -> Result<(bool, String)> {
    let data = Arc::new(random_half_dataset(40, 120, 16)?);
    for ell in 0..=3 {
        let index = SubsetIndex::preprocess(Arc::clone(&data), IndexParams::new(60, ell), 16)?;
        for i in 0..index.num_probes() {
            let probe = index.probe(i);
            let brute: Vec<u32> = (0..data.len() as u32)
                .filter(|&j| probe.iter().all(|&e| data.support(j as usize).get(e)))
                .collect();
            if index.bucket(i).collect::<Vec<_>>() != brute {
                return Ok((false, format!("bucket {i} differs at ell={ell}")));
            }
        }
    }
    Ok((true, "ell 0..=3, 60 probes each".into()))
}

fn elimination_keeps_truth() -> Result<(bool, String)> {
    let data = random_half_dataset(200, 400, 17)?;
    let queries = make_queries(&data, 30, 100, 17)?;
    for (truth, q) in &queries {
        let out = eliminate(
            &data,
            CandidateSet::full(data.len()),
            q,
            &mut OpCounter::new(),
        )?;
        let kept = match out {
            EliminationOutcome::Found(j) => j == *truth,
            EliminationOutcome::Ambiguous(v) => v.contains(truth),
            EliminationOutcome::Exhausted => false,
        };
        if !kept {
            return Ok((false, format!("truth {truth} eliminated")));
        }
    }
    Ok((true, "100 queries".into()))
}

fn thread_count_invariance() -> Result<(bool, String)> {
    let run = |threads: usize| -> Result<(String, Vec<u64>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::domain(e.to_string()))?;
        pool.install(|| {
            let data = Arc::new(random_half_dataset(100, 500, 18)?);
            let index = SubsetIndex::preprocess(Arc::clone(&data), IndexParams::new(300, 2), 18)?;
            let queries = make_queries(&data, 20, 20, 18)?;
            let ops = queries
                .iter()
                .map(|(_, q)| {
                    let mut ctr = OpCounter::new();
                    let mut r = rng::stream(18, &[tag::CERTIFY]);
                    index
                        .query(q, 0.5, &mut ctr, &mut r)
                        .map(|_| ctr.membership_ops)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((data.to_text(&[]) + &index.dump(), ops))
        })
    };
    let one = run(1)?;
    let four = run(4)?;
    Ok((one == four, "1 vs 4 threads".into()))
}

fn objective_codings_agree() -> Result<(bool, String)> {
    let mut r = rng::stream(19, &[]);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let w_u: f64 = r.random_range(0.05..0.95);
        let w_q = w_u * r.random_range(0.01..0.99);
        let t_u: f64 = r.random::<f64>();
        if (t_u - w_u).abs() < 1e-3 {
            continue;
        }
        let t_q = t_u * r.random::<f64>();
        let alpha: f64 = r.random();
        let (w, t) = (KlParams::new(w_u, w_q)?, CouplingPoint::new(t_u, t_q)?);
        let a = objective_f(t, w, alpha)?;
        let b = objective_f_definitional(t, w, alpha)?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok((
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e}"),
    ))
}

fn entropy_bounds() -> Result<(bool, String)> {
    for i in 1..10_000 {
        let x = i as f64 / 10_000.0;
        let h = entropy_h(x)?.value;
        let d2 = (0.5 - x).powi(2);
        if !(2.0 * d2 <= h && h <= 16.0 * d2) || (h - kl_binary(x, 0.5)).abs() > 1e-12 {
            return Ok((false, format!("violated at x={x}")));
        }
    }
    Ok((true, "9999 grid points".into()))
}

fn infimum_lemma_bound() -> Result<(bool, String)> {
    let mut details = Vec::new();
    let mut ok = true;
    for &w_q in &[1e-3f64, 1e-4, 1e-5] {
        let alpha = 1.0 + 1.0 / w_q.ln();
        let inf = inf_f(KlParams::new(0.5, w_q)?, alpha, &InfOptions::default())?;
        let bound = alpha - w_q.powf(1.0 - std::f64::consts::LN_2 - 0.1);
        ok &= inf.value >= bound;
        details.push(format!("w_q={w_q:e}: {:.6} >= {:.6}", inf.value, bound));
    }
    Ok((ok, details.join("; ")))
}

fn curve_ordering() -> Result<(bool, String)> {
    let opts = TradeoffOptions {
        curves: vec![
            Curve::AnalyticLower,
            Curve::NumericLop,
            Curve::UpperHalfUniform,
        ],
        inf: InfOptions {
            tu_grid: 400,
            ..Default::default()
        },
        ..Default::default()
    };
    let grid = [20.0, 100.0, 1000.0, 10_000.0];
    let rows = emit_tradeoff(0.5, &grid, &opts)?;
    let mut worst = f64::INFINITY;
    for chunk in rows.chunks(3) {
        let (a, num, up) = (chunk[0].rho_q, chunk[1].rho_q, chunk[2].rho_q);
        worst = worst.min((num - a + 0.02).min(up - num + 0.02));
    }
    Ok((worst >= 0.0, format!("minimum slack {worst:.4}")))
}

fn upper_exact_below_simplified() -> Result<(bool, String)> {
    for &s in &[2.0, 10.0, 100.0, 1e4] {
        for &rho in &[0.1, 0.5, 1.0] {
            for &eps in &[0.25, 1.0, 1.75] {
                let e = upper_bound_exponent(s, rho, eps, false)?.value;
                let p = upper_bound_exponent(s, rho, eps, true)?.value;
                if e > p + 1e-12 {
                    return Ok((false, format!("s={s} rho={rho} eps={eps}")));
                }
            }
        }
    }
    Ok((true, "36 grid points".into()))
}

fn adaptive_ell_one() -> Result<(bool, String)> {
    let data = Arc::new(random_half_dataset(500, 300, 20)?);
    let queries = make_queries(&data, 50, 100, 20)?;
    let opts = AdaptiveOptions::from_config(&ExperimentConfig::default(), 1);
    let r = adaptive_l_search(&data, &queries, &opts, 20)?;
    Ok((
        r.num_probes == 200,
        format!("stopped at L={}", r.num_probes),
    ))
}
