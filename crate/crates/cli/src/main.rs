use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hude::bench::{run_sweep, write_csv, Algorithm, ExperimentConfig, SweepParam};
use hude::instance_gen::{
    gen_gapss, gen_hude, gen_urde, load_instance, reduce_gapss_to_urde, reduction_s, reduction_w_q,
    write_instance, InstanceSidecar, Problem,
};
use hude::lower_bound::curves::{parse_s_grid, to_csv};
use hude::lower_bound::{emit_tradeoff, Curve, InfOptions, TradeoffOptions};
use hude::rng::{self, tag};
use hude::{
    eliminate, CandidateSet, EliminationOutcome, IndexParams, OpCounter, QueryVariant, SubsetIndex,
    SubsetOutcome,
};

/// Half-uniform distribution estimation: instances, indexes, sweeps and trade-off curves.
///
/// Every subcommand accepts `--config FILE` with a JSON object of the same
/// option names (snake_case); explicit flags win.
#[derive(Parser, Debug)]
#[command(name = "hude", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance directory (dataset.txt + instance.json)
    Gen(GenArgs),
    /// Run one algorithm on a stored instance and print a JSON result
    Query(QueryArgs),
    /// Parameter sweep comparing the subset index with Elimination
    Bench(BenchArgs),
    /// Emit trade-off curves as CSV
    Tradeoff(TradeoffArgs),
    /// Run the built-in invariant checks
    Verify(VerifyArgs),
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: GenFlags,
}

#[derive(Args, Debug, Serialize)]
struct GenFlags {
    /// hude, urde or gapss
    #[arg(long)]
    problem: Option<Problem>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Sample-rate parameter; `n/s` samples for hude
    #[arg(long)]
    s: Option<f64>,
    /// Separation of the hude promise
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    w_u: Option<f64>,
    #[arg(long)]
    w_q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// For gapss: store the reduced urde instance instead
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    reduce: bool,
}

#[derive(Deserialize, Debug, Serialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    #[serde(default = "default_problem")]
    problem: Problem,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_k")]
    k: usize,
    s: Option<f64>,
    eps: Option<f64>,
    w_u: Option<f64>,
    w_q: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    reduce: bool,
}

fn default_problem() -> Problem {
    Problem::Hude
}
fn default_n() -> usize {
    500
}
fn default_k() -> usize {
    1000
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance directory written by `gen`
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    flags: QueryFlags,
}

#[derive(Args, Debug, Serialize)]
struct QueryFlags {
    /// subset or elimination
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Number of probes L
    #[arg(long)]
    num_probes: Option<usize>,
    /// Probe size
    #[arg(long)]
    ell: Option<usize>,
    /// uj-certify or bucket-eliminate
    #[arg(long)]
    variant: Option<QueryVariant>,
    #[arg(long)]
    c_query: Option<f64>,
    /// Defaults to the instance's epsilon, else 0.5
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize, Debug, Serialize)]
#[serde(deny_unknown_fields)]
struct QueryConfig {
    #[serde(default = "default_algorithm")]
    algorithm: Algorithm,
    #[serde(default = "default_num_probes")]
    num_probes: usize,
    #[serde(default = "default_ell")]
    ell: usize,
    #[serde(default = "default_variant")]
    variant: QueryVariant,
    #[serde(default = "default_c_query")]
    c_query: f64,
    epsilon: Option<f64>,
    #[serde(default)]
    seed: u64,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Subset
}
fn default_num_probes() -> usize {
    2000
}
fn default_ell() -> usize {
    3
}
fn default_variant() -> QueryVariant {
    QueryVariant::BucketEliminate
}
fn default_c_query() -> f64 {
    hude::subset_index::DEFAULT_C_QUERY
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: BenchFlags,
}

#[derive(Args, Debug, Serialize)]
struct BenchFlags {
    /// Swept parameter: k, n, S or ell
    #[arg(long)]
    #[serde(rename = "sweep_param", skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepParam>,
    /// Comma-separated sweep values
    #[arg(long, value_delimiter = ',')]
    #[serde(rename = "sweep_values", skip_serializing_if = "Option::is_none")]
    values: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Samples per query (S)
    #[arg(long = "samples", visible_alias = "S")]
    #[serde(rename = "S")]
    samples: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    #[serde(rename = "queries_per_point")]
    queries: Option<usize>,
    #[arg(long)]
    l_init: Option<usize>,
    #[arg(long)]
    l_factor: Option<f64>,
    #[arg(long)]
    l_cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<QueryVariant>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c_query: Option<f64>,
    /// Multiplies k (0.2 gives the desk-scale preset)
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: TradeoffFlags,
}

#[derive(Args, Debug, Serialize)]
struct TradeoffFlags {
    #[arg(long)]
    rho_u: Option<f64>,
    /// `a:b:logN`, `a:b:linN` or a comma list
    #[arg(long)]
    s_grid: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated curve names
    #[arg(long, value_delimiter = ',')]
    curves: Option<Vec<Curve>>,
    /// Constant c of the `1 − c·ε²/s` curve; that curve is emitted only when set
    #[arg(long)]
    prior_constant: Option<f64>,
    /// Uniform t_u grid points in the infimum search
    #[arg(long)]
    tu_grid: Option<usize>,
    /// Uniform α grid points
    #[arg(long)]
    alpha_grid: Option<usize>,
}

#[derive(Deserialize, Debug, Serialize)]
#[serde(deny_unknown_fields)]
struct TradeoffConfig {
    #[serde(default = "default_rho_u")]
    rho_u: f64,
    #[serde(default = "default_s_grid")]
    s_grid: String,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_curves")]
    curves: Vec<Curve>,
    prior_constant: Option<f64>,
    #[serde(default = "default_tu_grid")]
    tu_grid: usize,
    #[serde(default = "default_alpha_grid")]
    alpha_grid: usize,
}

fn default_rho_u() -> f64 {
    0.5
}
fn default_s_grid() -> String {
    "20:10000:log25".into()
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_curves() -> Vec<Curve> {
    Curve::DEFAULT.to_vec()
}
fn default_tu_grid() -> usize {
    InfOptions::default().tu_grid
}
fn default_alpha_grid() -> usize {
    InfOptions::default().alpha_grid
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// all, or one of distributions, instances, index, lower-bound, bench
    #[arg(long, default_value = "all")]
    suite: String,
}

/// Layers explicit flags over the optional JSON config file.
fn resolve<T: DeserializeOwned>(config: Option<&Path>, flags: &impl Serialize) -> Result<T> {
    let mut base = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<Value>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => json!({}),
    };
    let Some(obj) = base.as_object_mut() else {
        bail!("config must be a JSON object");
    };
    if let Value::Object(flags) = serde_json::to_value(flags)? {
        for (key, value) in flags {
            if !value.is_null() {
                obj.insert(key, value);
            }
        }
    }
    serde_json::from_value(base).context("invalid configuration")
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let cfg: GenConfig = resolve(args.config.as_deref(), &args.flags)?;
    let (data, sidecar) = match cfg.problem {
        Problem::Hude => {
            let inst = gen_hude(cfg.n, cfg.k, cfg.eps.unwrap_or(0.5), cfg.s.unwrap_or(10.0), cfg.seed)
                .context("random half-uniform supports sit at distance close to 1, so large k needs --eps well below 1")?;
            if inst.retries > 0 {
                log::info!("promise held after {} dataset resamples", inst.retries);
            }
            let sc = InstanceSidecar::from_hude(&inst);
            (inst.dataset, sc)
        }
        Problem::Urde => {
            let inst = gen_urde(
                cfg.n,
                cfg.k,
                cfg.w_u.unwrap_or(0.5),
                cfg.s.unwrap_or(10.0),
                cfg.seed,
            )?;
            let sc = InstanceSidecar::from_urde(&inst);
            (inst.dataset, sc)
        }
        Problem::Gapss => {
            let w_u = cfg.w_u.unwrap_or(0.5);
            let w_q = match (cfg.w_q, cfg.s) {
                (Some(w_q), _) => w_q,
                (None, Some(s)) => reduction_w_q(w_u, s),
                (None, None) => bail!("gapss needs --w-q or --s"),
            };
            let inst = gen_gapss(cfg.n, cfg.k, w_u, w_q, cfg.seed)?;
            if cfg.reduce {
                let s = cfg.s.unwrap_or_else(|| reduction_s(w_u, w_q));
                let seed = rng::derive_seed(cfg.seed, &[tag::REDUCTION]);
                let red = reduce_gapss_to_urde(&inst, s, seed)?;
                let sc = InstanceSidecar::from_urde(&red);
                (red.dataset, sc)
            } else {
                let sc = InstanceSidecar::from_gapss(&inst);
                (inst.dataset, sc)
            }
        }
    };
    write_instance(&args.out, &data, &sidecar)?;
    log::info!("wrote instance to {}", args.out.display());
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let cfg: QueryConfig = resolve(args.config.as_deref(), &args.flags)?;
    let (data, sidecar) = load_instance(&args.instance)?;
    let q = sidecar.query_multiset()?;
    let data = Arc::new(data);
    let mut ctr = OpCounter::new();
    let (outcome, index, wall) = match cfg.algorithm {
        Algorithm::Elimination => {
            let start = Instant::now();
            let out = eliminate(&data, CandidateSet::full(data.len()), &q, &mut ctr)?;
            let wall = start.elapsed().as_nanos();
            match out {
                EliminationOutcome::Found(j) => ("found", Some(j), wall),
                EliminationOutcome::Ambiguous(_) => ("ambiguous", None, wall),
                EliminationOutcome::Exhausted => ("exhausted", None, wall),
            }
        }
        Algorithm::Subset => {
            let params = IndexParams::new(cfg.num_probes, cfg.ell)
                .with_variant(cfg.variant)
                .with_c_query(cfg.c_query);
            let epsilon = cfg.epsilon.or(sidecar.epsilon).unwrap_or(0.5);
            let index = SubsetIndex::preprocess(Arc::clone(&data), params, cfg.seed)?;
            let mut r = rng::stream(cfg.seed, &[tag::CERTIFY]);
            let start = Instant::now();
            let out = index.query(&q, epsilon, &mut ctr, &mut r)?;
            let wall = start.elapsed().as_nanos();
            match out {
                SubsetOutcome::Found(j) => ("found", Some(j), wall),
                SubsetOutcome::NotFound => ("not-found", None, wall),
            }
        }
    };
    let result = json!({
        "algorithm": cfg.algorithm,
        "outcome": outcome,
        "index": index,
        "truth_index": sidecar.truth_index,
        "correct": index == Some(sidecar.truth_index),
        "ops": ctr.membership_ops,
        "wall_time_ns": wall as u64,
    });
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let cfg: ExperimentConfig = resolve(args.config.as_deref(), &args.flags)?;
    let rows = run_sweep(&cfg)?;
    for r in &rows {
        log::info!("{}", r.csv_line());
    }
    let metadata = vec![
        format!("hude {} bench", hude::VERSION),
        format!("config {}", serde_json::to_string(&cfg)?),
    ];
    match &args.out {
        Some(path) => write_csv(path, &rows, &metadata)?,
        None => {
            for m in &metadata {
                println!("# {m}");
            }
            println!("{}", hude::bench::CSV_HEADER);
            for r in &rows {
                println!("{}", r.csv_line());
            }
        }
    }
    Ok(())
}

fn cmd_tradeoff(args: TradeoffArgs) -> Result<()> {
    let cfg: TradeoffConfig = resolve(args.config.as_deref(), &args.flags)?;
    let grid = parse_s_grid(&cfg.s_grid)?;
    let opts = TradeoffOptions {
        epsilon: cfg.epsilon,
        curves: cfg.curves.clone(),
        prior_constant: cfg.prior_constant,
        inf: InfOptions {
            tu_grid: cfg.tu_grid,
            alpha_grid: cfg.alpha_grid,
            ..Default::default()
        },
    };
    if opts.curves.contains(&Curve::PriorGeneral) && opts.prior_constant.is_none() {
        log::warn!("prior-general needs --prior-constant; skipping it");
    }
    let rows = emit_tradeoff(cfg.rho_u, &grid, &opts)?;
    let metadata = vec![
        format!("hude {} tradeoff", hude::VERSION),
        format!("config {}", serde_json::to_string(&cfg)?),
        "w_u=0.5; w_q(s)=(1-exp(-2/s))/2; o(1) terms dropped in analytic-lower and explicit-gapss"
            .to_string(),
    ];
    write_output(args.out.as_deref(), &to_csv(&rows, &metadata))
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    let report = hude::verify::run_suite(&args.suite)?;
    let mut all = true;
    for c in &report {
        println!(
            "{} {}/{}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.detail
        );
        all &= c.passed;
    }
    let failed = report.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", report.len(), failed);
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Query(a) => cmd_query(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a).map(|_| true),
        Command::Tradeoff(a) => cmd_tradeoff(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.ends_with(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
