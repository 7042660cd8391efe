//! `nilt` command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nilt::bench::{self, fmt17};
use nilt::cme::{generate_orders, CmeCache, OptimizeOptions, DEFAULT_CACHE_FILE};
use nilt::framework::{NiltResult, NiltWarning, OracleFn};
use nilt::transforms::{builtin, builtin_names};
use nilt::weights::{decompose_estimate, decompose_weight, weight_series};
use nilt::{
    cme_s, euler_coefficients, euler_s, evaluate_nilt, CoefficientSet, Expression, NiltError, ShiftSearchConfig,
    TransformQuery, UpperRule,
};
use rayon::prelude::*;
use serde_json::{json, Value};

/// Environment variable naming the directory that holds `cme_cache.json`.
const CACHE_DIR_ENV: &str = "NILT_CACHE_DIR";

#[derive(Parser)]
#[command(name = "nilt", version, about = "Numerical inverse Laplace transforms with optimised shifting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Invert a transform at one or more times.
    Invert(InvertArgs),
    /// Tabulate the CME and Euler inversions over a grid of shifts.
    SweepTheta(SweepArgs),
    /// Sample a weight function and report its zero-based decomposition.
    Weight(WeightArgs),
    /// Regenerate both benchmark tables and compare them with the reference values.
    BenchTables(BenchArgs),
    /// Optimise CME coefficients and write them to the cache file.
    GenerateCache(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Euler,
    Cme,
    EulerS,
    CmeS,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightMethod {
    Euler,
    Cme,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Narrow,
    Wide,
}

#[derive(Args, Clone)]
struct TransformArgs {
    /// Builtin transform pair: exp-t2, exp-t, exp-sqrt-t, poly3, sin-plus-1, delayed-exp or square-wave.
    #[arg(long, conflicts_with = "expr")]
    builtin: Option<String>,
    /// Transform h*(s) as an expression in `s`.
    #[arg(long, requires = "abscissa")]
    expr: Option<String>,
    /// Abscissa of convergence for --expr (`-inf` allowed).
    #[arg(long, allow_hyphen_values = true)]
    abscissa: Option<f64>,
    /// Declare h bounded, which fixes the upper shift bound.
    #[arg(long)]
    bounded: bool,
}

#[derive(Args, Clone)]
struct CacheArgs {
    /// CME cache file; defaults to $NILT_CACHE_DIR/cme_cache.json, then the shipped cache.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct InvertArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    order: usize,
    /// Times to invert at (repeat the flag or separate with commas).
    #[arg(long = "T", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    times: Vec<f64>,
    #[command(flatten)]
    transform: TransformArgs,
    #[command(flatten)]
    cache: CacheArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Treat a shift that ends on a search bound as an error (exit status 3).
    #[arg(long)]
    strict: bool,
    /// Golden-section termination width.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Upper shift bound rule for unbounded transforms.
    #[arg(long, value_enum, default_value = "narrow")]
    upper_rule: RuleArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    order: usize,
    #[arg(long = "T", allow_hyphen_values = true)]
    time: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta_max: f64,
    #[arg(long, default_value_t = 131)]
    steps: usize,
    #[command(flatten)]
    transform: TransformArgs,
    #[command(flatten)]
    cache: CacheArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct WeightArgs {
    #[arg(long, value_enum)]
    method: WeightMethod,
    #[arg(long)]
    order: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    #[arg(long, default_value_t = 4.0)]
    t_max: f64,
    #[arg(long, default_value_t = 401)]
    steps: usize,
    /// Window (0, t] scanned for the zeros around t = 1.
    #[arg(long, default_value_t = 4.0)]
    zero_window: f64,
    /// Builtin pair whose integrand h(tT) f(t) is added to the output (needs --T).
    #[arg(long, requires = "time")]
    builtin: Option<String>,
    #[arg(long = "T", requires = "builtin")]
    time: Option<f64>,
    #[command(flatten)]
    cache: CacheArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the zero-based decomposition as `part,value` CSV.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = bench::BENCH_ORDERS)]
    orders: Vec<usize>,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 15, 30, 60])]
    orders: Vec<usize>,
    /// Output file; defaults to $NILT_CACHE_DIR/cme_cache.json or ./cme_cache.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    random_starts: Option<usize>,
    #[arg(long)]
    continuation_starts: Option<usize>,
    #[arg(long)]
    max_evaluations: Option<usize>,
}

/// Failure categories, mapped to the documented exit statuses.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
    Strict(String),
}

impl Failure {
    fn status(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Strict(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Strict(m) => m,
        }
    }
}

impl From<NiltError> for Failure {
    fn from(e: NiltError) -> Self {
        match e {
            NiltError::InvalidArgument(_) | NiltError::EulerOddOrder(_) | NiltError::OrderOutOfRange { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Invert(a) => invert(a),
        Command::SweepTheta(a) => sweep(a),
        Command::Weight(a) => weight(a),
        Command::BenchTables(a) => bench_tables(a),
        Command::GenerateCache(a) => generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.status())
        }
    }
}

/// A transform ready for inversion plus what is needed to explain failures.
struct Source {
    name: String,
    query: TransformQuery,
    expression: Option<Expression>,
    oracle: Option<OracleFn>,
}

impl Source {
    fn from_args(args: &TransformArgs) -> CliResult<Source> {
        match (&args.builtin, &args.expr) {
            (Some(name), None) => {
                let pair = builtin(name).ok_or_else(|| {
                    Failure::Usage(format!("unknown builtin `{name}`; available: {}", builtin_names().join(", ")))
                })?;
                let mut query = pair.query();
                if args.bounded {
                    query.bounded = true;
                }
                Ok(Source {
                    name: pair.name.to_string(),
                    oracle: Some(pair.oracle.clone()),
                    query,
                    expression: None,
                })
            }
            (None, Some(text)) => {
                let abscissa = args
                    .abscissa
                    .ok_or_else(|| Failure::Usage("--expr needs --abscissa (the abscissa of convergence)".into()))?;
                let expression = Expression::parse(text).map_err(|e| Failure::Usage(format!("cannot parse --expr: {e}")))?;
                Ok(Source {
                    name: text.clone(),
                    query: expression.clone().into_query(abscissa, args.bounded),
                    expression: Some(expression),
                    oracle: None,
                })
            }
            _ => Err(Failure::Usage("give either --builtin NAME or --expr TEXT with --abscissa".into())),
        }
    }

    /// Rewrites a non-finite transform value from an expression into the
    /// parser's span-annotated evaluation error.
    fn explain(&self, e: NiltError) -> Failure {
        if let (NiltError::NonFiniteTransform { s, .. }, Some(expr)) = (&e, &self.expression) {
            if let Err(detail) = expr.evaluate(*s) {
                return Failure::Numeric(format!("{e}: {detail}"));
            }
        }
        Failure::from(e)
    }
}

fn load_cache(args: &CacheArgs) -> CliResult<CmeCache> {
    if let Some(path) = &args.cache {
        return Ok(CmeCache::load(path)?);
    }
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        let path = Path::new(&dir).join(DEFAULT_CACHE_FILE);
        if path.exists() {
            return Ok(CmeCache::load(&path)?);
        }
    }
    Ok(CmeCache::builtin().clone())
}

fn cme_set(cache: &CmeCache, n: usize) -> CliResult<CoefficientSet> {
    cache.coefficients(n).map_err(|e| match e {
        NiltError::MissingCmeOrder(_) => Failure::Numeric(format!(
            "no CME coefficients of order {n} in the cache (available: {:?}); run `nilt generate-cache --orders {n}`",
            cache.orders()
        )),
        other => other.into(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn warning_name(w: &NiltWarning) -> String {
    match w {
        NiltWarning::LowerBoundHit => "lower_bound_hit".into(),
        NiltWarning::UpperBoundHit => "upper_bound_hit".into(),
        NiltWarning::RestartBudgetExhausted => "restart_budget_exhausted".into(),
        NiltWarning::ImaginaryResidue { ratio } => format!("imaginary_residue({ratio:.3e})"),
        NiltWarning::EulerShiftUnverified => "euler_shift_unverified".into(),
        NiltWarning::MethodDisagreement { relative_difference } => {
            format!("method_disagreement({relative_difference:.3e})")
        }
    }
}

struct InvertRow {
    t: f64,
    value: f64,
    theta_hat: Option<f64>,
    evaluations: usize,
    exact: Option<f64>,
    shifted: Option<NiltResult>,
}

fn invert(a: InvertArgs) -> CliResult<()> {
    let source = Source::from_args(&a.transform)?;
    if let Some(bad) = a.times.iter().find(|t| !t.is_finite() || **t <= 0.0) {
        return Err(Failure::Usage(format!("--T values must be positive and finite, got {bad}")));
    }
    if a.epsilon.is_nan() || a.epsilon <= 0.0 {
        return Err(Failure::Usage("--epsilon must be positive".into()));
    }
    let cfg = ShiftSearchConfig {
        epsilon: a.epsilon,
        upper_rule: match a.upper_rule {
            RuleArg::Narrow => UpperRule::Narrow,
            RuleArg::Wide => UpperRule::Wide,
        },
        ..ShiftSearchConfig::default()
    };
    let needs_cme = a.method != MethodArg::Euler;
    let needs_euler = matches!(a.method, MethodArg::Euler | MethodArg::EulerS);
    let cme = if needs_cme { Some(cme_set(&load_cache(&a.cache)?, a.order)?) } else { None };
    let euler = if needs_euler { Some(euler_coefficients(a.order)?) } else { None };

    let rows: Vec<Result<InvertRow, NiltError>> = a
        .times
        .par_iter()
        .map(|&t| {
            let exact = source.oracle.as_ref().map(|o| o(t));
            let row = match a.method {
                MethodArg::Euler | MethodArg::Cme => {
                    let coeffs = cme.as_ref().or(euler.as_ref()).expect("coefficients prepared");
                    let v = evaluate_nilt(coeffs, &source.query, t, 0.0)?;
                    InvertRow {
                        t,
                        value: v.value,
                        theta_hat: None,
                        evaluations: 1,
                        exact,
                        shifted: None,
                    }
                }
                MethodArg::CmeS | MethodArg::EulerS => {
                    let c = cme.as_ref().expect("CME coefficients prepared");
                    let r = match &euler {
                        Some(e) => euler_s(&source.query, t, c, e, &cfg)?,
                        None => cme_s(&source.query, t, c, &cfg)?,
                    };
                    InvertRow {
                        t,
                        value: r.value,
                        theta_hat: Some(r.theta_hat),
                        evaluations: r.objective_evals,
                        exact,
                        shifted: Some(r),
                    }
                }
            };
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| source.explain(e))?;

    let method = a.method.to_possible_value().expect("named variant").get_name().to_string();
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("transform,method,n,T,value,theta_hat,evaluations,exact,warnings\n");
            for r in &rows {
                let warnings: Vec<String> = r.shifted.iter().flat_map(|x| x.warnings.iter().map(warning_name)).collect();
                let _ = writeln!(
                    s,
                    "{},{method},{},{},{},{},{},{},{}",
                    csv_field(&source.name),
                    a.order,
                    r.t,
                    fmt17(r.value),
                    opt17(r.theta_hat),
                    r.evaluations,
                    opt17(r.exact),
                    warnings.join(";")
                );
            }
            s
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "transform": source.name,
                        "method": method,
                        "n": a.order,
                        "T": r.t,
                        "value": r.value,
                        "theta_hat": r.theta_hat,
                        "evaluations": r.evaluations,
                        "exact": r.exact,
                        "theta_lower": r.shifted.as_ref().map(|x| x.theta_lower),
                        "theta_upper": r.shifted.as_ref().map(|x| x.theta_upper),
                        "restarts": r.shifted.as_ref().map(|x| x.restarts),
                        "warnings": r.shifted.as_ref().map(|x| x.warnings.clone()).unwrap_or_default(),
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items).expect("rows serialise");
            s.push('\n');
            s
        }
    };
    emit(None, &text)?;

    let mut bound_hits = 0;
    for r in &rows {
        let Some(x) = &r.shifted else { continue };
        for w in &x.warnings {
            match w {
                NiltWarning::LowerBoundHit => {
                    bound_hits += 1;
                    eprintln!(
                        "warning: T={}: a > −∞ and θ̂ = θ_ℓ (θ̂ = {:.6} at the lower bound {:.6}); the minimum may lie beyond the convergence region and the estimate is unreliable",
                        r.t, x.theta_hat, x.theta_lower
                    );
                }
                NiltWarning::UpperBoundHit => {
                    bound_hits += 1;
                    eprintln!(
                        "warning: T={}: θ̂ = θ_u = {:.6}, the fixed upper bound for a bounded transform",
                        r.t, x.theta_upper
                    );
                }
                NiltWarning::RestartBudgetExhausted => {
                    bound_hits += 1;
                    eprintln!(
                        "warning: T={}: θ̂ = {:.6} still on a search bound after {} expansions of [θ_ℓ, θ_u] = [{:.6}, {:.6}]",
                        r.t, x.theta_hat, x.restarts, x.theta_lower, x.theta_upper
                    );
                }
                NiltWarning::ImaginaryResidue { ratio } => {
                    eprintln!("warning: T={}: imaginary residue {ratio:.3e} of the value; cancellation suspected", r.t);
                }
                NiltWarning::MethodDisagreement { relative_difference } => eprintln!(
                    "warning: T={}: Euler-S differs from CME-S by {:.1}%; the CME shift may not suit the Euler weights",
                    r.t,
                    100.0 * relative_difference
                ),
                NiltWarning::EulerShiftUnverified => {}
            }
        }
    }
    if a.method == MethodArg::EulerS {
        eprintln!("note: Euler-S reuses the CME-S shift; it is not verified for the Euler weights");
    }
    if a.strict && bound_hits > 0 {
        return Err(Failure::Strict(format!("{bound_hits} bound-hit warning(s) under --strict")));
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn grid(lo: f64, hi: f64, steps: usize) -> CliResult<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || steps == 0 {
        return Err(Failure::Usage(format!("invalid grid [{lo}, {hi}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let source = Source::from_args(&a.transform)?;
    if !a.time.is_finite() || a.time <= 0.0 {
        return Err(Failure::Usage(format!("--T must be positive and finite, got {}", a.time)));
    }
    let thetas = grid(a.theta_min, a.theta_max, a.steps)?;
    let cme = cme_set(&load_cache(&a.cache)?, a.order)?;
    let euler = euler_coefficients(a.order)?;
    let rows: Vec<bench::SweepRow> = thetas
        .par_iter()
        .map(|&theta| bench::sweep_theta(&source.query, a.time, &cme, &euler, &[theta])[0])
        .collect();
    let text = match a.format {
        Format::Csv => bench::sweep_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialise") + "\n",
    };
    emit(a.out.as_deref(), &text)
}

fn weight(a: WeightArgs) -> CliResult<()> {
    let coeffs = match a.method {
        WeightMethod::Euler => euler_coefficients(a.order)?,
        WeightMethod::Cme => cme_set(&load_cache(&a.cache)?, a.order)?,
    };
    let ts = grid(a.t_min, a.t_max, a.steps)?;
    let pair = match &a.builtin {
        Some(name) => Some(builtin(name).ok_or_else(|| Failure::Usage(format!("unknown builtin `{name}`")))?),
        None => None,
    };
    let query = pair.as_ref().map(|p| p.query());
    let integrand = query.as_ref().zip(a.time);
    if let Some(t) = a.time {
        if !t.is_finite() || t <= 0.0 {
            return Err(Failure::Usage(format!("--T must be positive and finite, got {t}")));
        }
    }
    let samples = weight_series(&coeffs, a.theta, &ts, integrand)?;

    let text = match a.format {
        Format::Csv => {
            let mut s = String::from(if integrand.is_some() { "t,weight,h,product\n" } else { "t,weight\n" });
            for p in &samples {
                if integrand.is_some() {
                    let _ = writeln!(s, "{},{},{},{}", fmt17(p.t), fmt17(p.weight), opt17(p.h), opt17(p.product));
                } else {
                    let _ = writeln!(s, "{},{}", fmt17(p.t), fmt17(p.weight));
                }
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&samples).expect("samples serialise") + "\n",
    };
    emit(a.out.as_deref(), &text)?;

    if let Some(path) = &a.decomposition {
        let d = decompose_weight(&coeffs.shifted(a.theta), a.zero_window)?;
        let mut s = String::from("part,value\n");
        for (k, v) in [
            ("z_I", d.z_i),
            ("z_I+1", d.z_i1),
            ("f_left", d.f_left),
            ("f_main", d.f_main),
            ("f_right", d.f_right),
        ] {
            let _ = writeln!(s, "{k},{}", fmt17(v));
        }
        if let Some((q, t)) = integrand {
            let e = decompose_estimate(q, &coeffs, t, a.theta)?;
            for (k, v) in [("left", e.left), ("main", e.main), ("right", e.right), ("total", e.total)] {
                let _ = writeln!(s, "{k},{}", fmt17(v));
            }
        }
        std::fs::write(path, s)?;
    }
    Ok(())
}

fn bench_tables(a: BenchArgs) -> CliResult<()> {
    let cache = load_cache(&a.cache)?;
    for &n in &a.orders {
        cme_set(&cache, n)?;
    }
    let start = Instant::now();
    let t1 = bench::table1(&cache, &a.orders)?;
    let t2 = bench::table2(&cache, &a.orders, &ShiftSearchConfig::default())?;
    let cmp = bench::compare(&t1, &t2, &bench::reference_tables());
    std::fs::create_dir_all(&a.out_dir)?;
    std::fs::write(a.out_dir.join("table1.csv"), bench::table1_csv(&t1))?;
    std::fs::write(a.out_dir.join("table2.csv"), bench::table2_csv(&t2))?;
    std::fs::write(a.out_dir.join("comparison.csv"), cmp.to_csv())?;
    let failing = cmp.failures().count();
    println!(
        "wrote table1.csv, table2.csv and comparison.csv to {} in {:.2} s",
        a.out_dir.display(),
        start.elapsed().as_secs_f64()
    );
    println!(
        "comparison: {} of {} cells within tolerance, overall {}",
        cmp.cells.len() - failing,
        cmp.cells.len(),
        if failing == 0 { "pass" } else { "fail" }
    );
    for c in cmp.failures() {
        println!(
            "  {} {} {}: computed {}, reference {}, allowed deviation {}",
            c.table,
            c.row,
            c.column,
            fmt17(c.computed),
            fmt17(c.reference),
            fmt17(c.allowed)
        );
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let defaults = OptimizeOptions::default();
    let options = OptimizeOptions {
        seed: a.seed.unwrap_or(defaults.seed),
        random_starts: a.random_starts.unwrap_or(defaults.random_starts),
        continuation_starts: a.continuation_starts.unwrap_or(defaults.continuation_starts),
        max_evaluations: a.max_evaluations.unwrap_or(defaults.max_evaluations),
        ..defaults
    };
    let out = match (&a.out, std::env::var_os(CACHE_DIR_ENV)) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => Path::new(&dir).join(DEFAULT_CACHE_FILE),
        (None, None) => PathBuf::from(DEFAULT_CACHE_FILE),
    };
    let mut cache = if out.exists() { CmeCache::load(&out)? } else { CmeCache::new() };
    let start = Instant::now();
    let reports = generate_orders(&a.orders, &options)?;
    for r in &reports {
        eprintln!(
            "n={:>3}  scv={:.10e}  evaluations={}  starts={}",
            r.form.order(),
            r.scv,
            r.evaluations,
            r.starts
        );
        cache.insert_report(r, concat!("nilt ", env!("CARGO_PKG_VERSION")));
    }
    cache.save(&out)?;
    eprintln!(
        "wrote {} orders to {} in {:.1} s",
        reports.len(),
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
