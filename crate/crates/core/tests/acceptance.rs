//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use hude::bench::{
    make_queries, run_elimination, run_point, run_sweep, ExperimentConfig, SweepParam,
};
use hude::instance_gen::{
    gen_gapss, gen_hude, random_half_dataset, reduce_gapss_to_urde, reduction_w_q, write_instance,
    InstanceSidecar,
};
use hude::lower_bound::curves::parse_s_grid;
use hude::lower_bound::{
    emit_tradeoff, entropy_h, inf_f, kl_binary, objective_f, objective_f_definitional,
    CouplingPoint, Curve, InfOptions, KlParams, TradeoffOptions,
};
use hude::rng::{self, derive_seed, tag};
use hude::stats::chi_square_gof;
use hude::{HalfUniformDistribution, IndexParams, SubsetIndex, SupportSet};

const SEEDS: [u64; 3] = [1, 2, 3];

// Tolerances.
const C1_MAX_MEAN_OPS: f64 = 30_000.0;
const C2_MAX_RATIO: f64 = 0.5;
const C4_REL_TOL: f64 = 0.15;
const C5_MAX_SE: f64 = 3.0;
const C6_MIN_P: f64 = 0.01;
const C6_MIN_PASSING_SEEDS: usize = 2;
const C8_DELTA: f64 = 0.1;
const C8_SLACK: f64 = 0.02;
const C9_TOL: f64 = 1e-12;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn desk_config(k: usize) -> ExperimentConfig {
    ExperimentConfig {
        k,
        sweep_values: vec![k],
        ..Default::default()
    }
}

fn point_seed(seed: u64) -> u64 {
    derive_seed(seed, &[tag::BENCH_POINT, 0])
}

fn c1_desk_defaults() -> Outcome {
    let cfg = desk_config(10_000);
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let rows = run_point(cfg.point(10_000), &cfg, point_seed(seed)).expect("sweep point");
        let sub = &rows[0];
        ok &= sub.accuracy == 1.0 && sub.mean_ops < C1_MAX_MEAN_OPS;
        parts.push(format!(
            "seed {seed}: L={} acc={:.2} ops={:.0}",
            sub.num_probes.unwrap(),
            sub.accuracy,
            sub.mean_ops
        ));
    }
    (
        ok,
        format!("{} (limit {C1_MAX_MEAN_OPS})", parts.join("; ")),
    )
}

fn c2_subset_vs_elimination() -> Outcome {
    let cfg = desk_config(20_000);
    let rows = run_point(cfg.point(20_000), &cfg, point_seed(1)).expect("sweep point");
    let (sub, elim) = (&rows[0], &rows[1]);
    let ratio = sub.mean_ops / elim.mean_ops;
    (
        ratio <= C2_MAX_RATIO && sub.accuracy == 1.0,
        format!(
            "subset {:.0} ops (L={}), elimination {:.0} ops, ratio {ratio:.3} (limit {C2_MAX_RATIO})",
            sub.mean_ops,
            sub.num_probes.unwrap(),
            elim.mean_ops
        ),
    )
}

fn c3_elimination_accuracy() -> Outcome {
    let mut worst = 1.0f64;
    let mut points = 0;
    for seed in SEEDS {
        for (i, &k) in [5_000usize, 10_000, 20_000, 50_000].iter().enumerate() {
            let ps = derive_seed(seed, &[tag::BENCH_POINT, i as u64]);
            let data = random_half_dataset(500, k, ps).unwrap();
            let queries = make_queries(&data, 50, 100, ps).unwrap();
            let m = run_elimination(&data, &queries).unwrap();
            worst = worst.min(m.accuracy());
            points += 1;
        }
    }
    (
        worst == 1.0,
        format!("{points} points, minimum accuracy {worst:.2}"),
    )
}

fn c4_bucket_sizes() -> Outcome {
    let (k, n) = (10_000usize, 500usize);
    let data = Arc::new(random_half_dataset(n, k, 40).unwrap());
    let mut ok = true;
    let mut parts = Vec::new();
    for ell in [2usize, 3, 4] {
        let expected = (0..ell).fold(k as f64, |acc, i| {
            acc * (n as f64 / 2.0 - i as f64) / (n - i) as f64
        });
        let index = SubsetIndex::preprocess(
            Arc::clone(&data),
            IndexParams::new(2000, ell),
            41 + ell as u64,
        )
        .unwrap();
        let mean = (0..2000).map(|i| index.bucket_len(i) as f64).sum::<f64>() / 2000.0;
        let rel = (mean - expected).abs() / expected;
        ok &= rel <= C4_REL_TOL;
        parts.push(format!(
            "ell={ell}: {mean:.1} vs {expected:.1} ({:.1}%)",
            100.0 * rel
        ));
    }
    // Exact rational values of the same expectation.
    let reference = [
        2_494.989_979_959_92,
        1_242.484_969_939_88,
        617.492_530_332_29,
    ];
    for (ell, r) in [2usize, 3, 4].iter().zip(reference) {
        let e = (0..*ell).fold(k as f64, |acc, i| {
            acc * (n as f64 / 2.0 - i as f64) / (n - i) as f64
        });
        ok &= (e - r).abs() < 1e-6;
    }
    (ok, parts.join("; "))
}

fn c5_probe_hit() -> Outcome {
    let (n, samples, ell, trials) = (500usize, 50usize, 3usize, 100_000u64);
    let mut hits = 0u64;
    let mut expected = 0.0f64;
    for t in 0..trials {
        let mut r = rng::stream(50, &[t]);
        let support =
            SupportSet::from_elements(n, index::sample(&mut r, n, n / 2).iter().map(|e| e as u32))
                .unwrap();
        let q = HalfUniformDistribution::new(support)
            .sample(samples, &mut r)
            .unwrap();
        let m = q.distinct().len() as f64;
        expected += (0..ell)
            .map(|j| (m - j as f64) / (n - j) as f64)
            .product::<f64>();
        let probe = index::sample(&mut r, n, ell);
        hits += u64::from(probe.iter().all(|e| q.distinct().get(e as u32)));
    }
    let p_hat = hits as f64 / trials as f64;
    let p = expected / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let z = (p_hat - p) / se;
    (
        z.abs() <= C5_MAX_SE,
        format!("observed {p_hat:.6}, expected {p:.6}, z = {z:.2}"),
    )
}

fn c6_poissonization() -> Outcome {
    let (n, w_u, s, trials) = (200usize, 0.5, 10.0, 5000u64);
    let lambda = 1.0 / (s * w_u);
    let w_q = reduction_w_q(w_u, s);
    let max_bin = 6usize;
    let mut passing = 0;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let mut observed = vec![0.0f64; max_bin + 1];
        for t in 0..trials {
            let g = gen_gapss(n, 1, w_u, w_q, derive_seed(seed, &[t])).unwrap();
            let u = reduce_gapss_to_urde(&g, s, derive_seed(seed, &[t, tag::REDUCTION])).unwrap();
            for e in g.dataset.support(g.truth_index).iter() {
                observed[(u.query.count(e) as usize).min(max_bin)] += 1.0;
            }
        }
        let total: f64 = observed.iter().sum();
        let mut pmf: Vec<f64> = (0..max_bin)
            .map(|c| {
                (-lambda).exp() * lambda.powi(c as i32) / (1..=c).map(|i| i as f64).product::<f64>()
            })
            .collect();
        pmf.push(1.0 - pmf.iter().sum::<f64>());
        let expected: Vec<f64> = pmf.iter().map(|p| p * total).collect();
        let test = chi_square_gof(&observed, &expected);
        if test.p_value > C6_MIN_P {
            passing += 1;
        }
        parts.push(format!(
            "seed {seed}: chi2={:.2} df={} p={:.3}",
            test.statistic, test.dof, test.p_value
        ));
    }
    (
        passing >= C6_MIN_PASSING_SEEDS,
        format!("{} ({passing}/3 above {C6_MIN_P})", parts.join("; ")),
    )
}

fn c7_entropy_bounds() -> Outcome {
    let mut violations = 0;
    for i in 1..10_000 {
        let x = i as f64 / 10_000.0;
        let h = entropy_h(x).unwrap().value;
        let d2 = (0.5 - x) * (0.5 - x);
        if !(2.0 * d2 <= h && h <= 16.0 * d2) {
            violations += 1;
        }
    }
    (
        violations == 0,
        format!("9999 grid points, {violations} violations"),
    )
}

fn c8_lower_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for w_q in [1e-3f64, 1e-4, 1e-5] {
        let alpha = 1.0 + 1.0 / w_q.ln();
        let inf = inf_f(
            KlParams::new(0.5, w_q).unwrap(),
            alpha,
            &InfOptions::default(),
        )
        .unwrap();
        let bound = alpha - w_q.powf(1.0 - std::f64::consts::LN_2 - C8_DELTA);
        ok &= inf.value >= bound;
        parts.push(format!("w_q={w_q:e}: inf={:.4} >= {bound:.4}", inf.value));
    }
    let opts = TradeoffOptions {
        curves: vec![
            Curve::AnalyticLower,
            Curve::NumericLop,
            Curve::UpperHalfUniform,
        ],
        ..Default::default()
    };
    let grid = parse_s_grid("20:10000:log25").unwrap();
    let rows = emit_tradeoff(0.5, &grid, &opts).unwrap();
    let mut min_slack = f64::INFINITY;
    for c in rows.chunks(3) {
        let (a, num, up) = (c[0].rho_q, c[1].rho_q, c[2].rho_q);
        min_slack = min_slack.min((num - a).min(up - num) + C8_SLACK);
    }
    ok &= min_slack >= 0.0;
    parts.push(format!(
        "ordering over {} s values, minimum slack {min_slack:.4}",
        grid.len()
    ));
    (ok, parts.join("; "))
}

fn c9_two_codings() -> Outcome {
    let mut r = rng::stream(90, &[]);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 10_000 {
        let w_u: f64 = r.random_range(0.01..0.99);
        let w_q: f64 = w_u * r.random_range(0.0..1.0);
        let t_u: f64 = r.random_range(0.0..=1.0);
        let t_q: f64 = t_u * r.random_range(0.0..=1.0);
        let alpha: f64 = r.random_range(0.0..=1.0);
        let (Ok(w), Ok(t)) = (KlParams::new(w_u, w_q), CouplingPoint::new(t_u, t_q)) else {
            continue;
        };
        if t_u == w_u {
            continue;
        }
        let a = objective_f(t, w, alpha).unwrap();
        let b = objective_f_definitional(t, w, alpha).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
        count += 1;
    }
    let mut worst_h = 0.0f64;
    for i in 1..10_000 {
        let x = i as f64 / 10_000.0;
        worst_h = worst_h.max((entropy_h(x).unwrap().value - kl_binary(x, 0.5)).abs());
    }
    (
        worst <= C9_TOL && worst_h <= C9_TOL,
        format!("objective max relative gap {worst:.2e}; H vs d(x||1/2) max gap {worst_h:.2e}"),
    )
}

fn c10_determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let dir = tempfile::tempdir().unwrap();
                let inst = gen_hude(500, 2000, 0.5, 10.0, 100).unwrap();
                write_instance(
                    dir.path(),
                    &inst.dataset,
                    &InstanceSidecar::from_hude(&inst),
                )
                .unwrap();
                let files: Vec<Vec<u8>> = ["dataset.txt", "instance.json"]
                    .iter()
                    .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                    .collect();
                let cfg = ExperimentConfig {
                    sweep_param: SweepParam::K,
                    sweep_values: vec![1000, 3000],
                    queries_per_point: 50,
                    ell: 2,
                    seed: 100,
                    ..Default::default()
                };
                let ops: Vec<(f64, f64, Option<usize>)> = run_sweep(&cfg)
                    .unwrap()
                    .iter()
                    .map(|r| (r.accuracy, r.mean_ops, r.num_probes))
                    .collect();
                (files, ops)
            })
    };
    let (f1, o1) = run(1);
    let (f4, o4) = run(4);
    (
        f1 == f4 && o1 == o4,
        format!(
            "files identical: {}, op counts identical: {}",
            f1 == f4,
            o1 == o4
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "desk-scale defaults: accuracy and op budget",
            c1_desk_defaults,
        ),
        (
            "subset at most half the elimination ops",
            c2_subset_vs_elimination,
        ),
        ("elimination accuracy across k", c3_elimination_accuracy),
        ("bucket size law", c4_bucket_sizes),
        ("probe hit probability", c5_probe_hit),
        ("poissonized reduction counts", c6_poissonization),
        ("entropy bounds", c7_entropy_bounds),
        ("lower bound consistency", c8_lower_bound),
        ("two-coding agreement", c9_two_codings),
        ("determinism across thread counts", c10_determinism),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        failed += usize::from(!ok);
        writeln!(
            out,
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        )
        .unwrap();
        out.flush().unwrap();
    }
    writeln!(
        out,
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    )
    .unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
