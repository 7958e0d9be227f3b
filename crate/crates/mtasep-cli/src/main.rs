//! Command-line front end: weights, probabilities, sector tables, sampling,
//! the exact oracle, and the algebraic verification suites.
//!
//! Exit codes: 0 success, 2 input error, 3 verification failure, 4 resource
//! bound exceeded.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use mtasep::{algebra, multiline, oracle, pushing, tensor, Configuration, Error, Sector};

#[derive(Parser)]
#[command(
    name = "mtasep",
    version,
    about = "Exact stationary measure of the multispecies TASEP on a ring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary weight of one configuration.
    Weight(WeightArgs),
    /// Exact stationary probability of one configuration.
    Prob(ProbArgs),
    /// Weight/probability table for a whole sector.
    Table(TableArgs),
    /// The complete lower-species ancestor set of a configuration.
    Ancestors(AncestorsArgs),
    /// Empirical sampling of a sector against the exact distribution.
    Sample(SampleArgs),
    /// Algebraic verification suites.
    Verify(VerifyArgs),
    /// Exact Markov oracle for a sector, optionally cross-checking methods.
    Oracle(OracleArgs),
    /// Dump the tensor-ansatz operators for a species count.
    Ops(OpsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Trace,
    Ancestors,
    Multiline,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Trace => "trace",
            Method::Ancestors => "ancestors",
            Method::Multiline => "multiline",
        }
    }
}

#[derive(Args)]
struct WeightArgs {
    /// Configuration text: compact digits or comma-separated labels.
    #[arg(long)]
    config: String,
    /// Declared species count (defaults to the maximum label present).
    #[arg(long)]
    species: Option<u8>,
    #[arg(long, value_enum, default_value = "trace")]
    method: Method,
    /// Truncation dimension for the trace method (defaults to L+1).
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ProbArgs {
    #[arg(long)]
    config: String,
    #[arg(long)]
    species: Option<u8>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableArgs {
    /// Ring length.
    #[arg(long)]
    l: usize,
    /// Comma-separated populations P_1,P_2,...
    #[arg(long)]
    p: String,
    #[arg(long, value_enum, default_value = "trace")]
    method: Method,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Cap on enumerated states (also via MTASEP_MAX_STATES).
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Args)]
struct AncestorsArgs {
    #[arg(long)]
    config: String,
    #[arg(long)]
    species: Option<u8>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    l: usize,
    #[arg(long)]
    p: String,
    /// Number of samples.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = "0")]
    seed: u64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyWhat {
    Quadratic,
    Hats,
    Stationarity,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    what: VerifyWhat,
    /// Species count (hats, stationarity).
    #[arg(long)]
    n: Option<u8>,
    /// Truncation dimension (quadratic, hats).
    #[arg(long)]
    d: Option<usize>,
    /// Ring length (stationarity).
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    l: usize,
    #[arg(long)]
    p: String,
    /// Cross-check every weight route against the oracle.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Args)]
struct OpsArgs {
    /// Species count.
    #[arg(long)]
    n: u8,
    #[arg(long)]
    json: bool,
}

enum CliError {
    Input(String),
    VerificationFailed(String),
    Bound(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BoundExceeded { .. } => CliError::Bound(e.to_string()),
            Error::SingularGenerator { .. } => CliError::VerificationFailed(e.to_string()),
            Error::InternalConsistency(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Weight(args) => cmd_weight(args),
        Command::Prob(args) => cmd_prob(args),
        Command::Table(args) => cmd_table(args),
        Command::Ancestors(args) => cmd_ancestors(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Ops(args) => cmd_ops(args),
    };
    eprintln!("elapsed: {} ms", started.elapsed().as_millis());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::VerificationFailed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Bound(msg)) => {
            eprintln!("resource bound exceeded: {msg}");
            ExitCode::from(4)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn parse_config(text: &str, species: Option<u8>) -> Result<Configuration, CliError> {
    Configuration::parse_with_species(text, species).map_err(CliError::from)
}

fn parse_sector(l: usize, p: &str) -> Result<Sector, CliError> {
    let populations = p
        .split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("malformed population `{tok}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Sector::from_populations(l, &populations).map_err(CliError::from)
}

fn max_states(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("MTASEP_MAX_STATES")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(oracle::DEFAULT_MAX_STATES)
}

fn emit(json_mode: bool, payload: &Value, human: impl FnOnce()) {
    if json_mode {
        println!(
            "{}",
            serde_json::to_string_pretty(payload).expect("serializable")
        );
    } else {
        human();
    }
}

fn compute_weight(
    config: &Configuration,
    method: Method,
    truncation: Option<usize>,
) -> Result<BigInt, CliError> {
    Ok(match method {
        Method::Trace => tensor::trace_weight(config, truncation),
        Method::Ancestors => pushing::weight_recursive(config),
        Method::Multiline => {
            let bound = std::env::var("MTASEP_MAX_STATES")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(multiline::DEFAULT_ENUMERATION_BOUND);
            multiline::count_ancestors_bounded(config, bound)?
        }
    })
}

fn cmd_weight(args: WeightArgs) -> CliResult {
    let config = parse_config(&args.config, args.species)?;
    let weight = compute_weight(&config, args.method, args.truncation)?;
    let payload = json!({
        "command": "weight",
        "config": config.to_string(),
        "L": config.len(),
        "N": config.n_species(),
        "method": args.method.name(),
        "weight": weight.to_string(),
    });
    emit(args.json, &payload, || {
        println!("{weight}");
        eprintln!("config={config} method={}", args.method.name());
    });
    Ok(())
}

fn cmd_prob(args: ProbArgs) -> CliResult {
    let config = parse_config(&args.config, args.species)?;
    let weight = tensor::trace_weight(&config, None);
    let (reduced, _) = config.reduce_species();
    let z = tensor::normalization(&reduced.sector());
    let prob = tensor::probability(&config);
    let payload = json!({
        "command": "prob",
        "config": config.to_string(),
        "weight": weight.to_string(),
        "normalization": z.to_string(),
        "probability": prob.to_string(),
    });
    emit(args.json, &payload, || {
        println!("{weight}/{z} = {prob}");
        eprintln!("config={config}");
    });
    Ok(())
}

fn cmd_table(args: TableArgs) -> CliResult {
    let sector = parse_sector(args.l, &args.p)?;
    let bound = max_states(args.max_states);
    let size = sector.size();
    if size > num_bigint::BigUint::from(bound) {
        return Err(CliError::Bound(format!(
            "sector has {size} states, bound is {bound}"
        )));
    }
    let z = tensor::normalization(&sector);
    let configs = sector.configurations();
    let mut rows = Vec::with_capacity(configs.len());
    let mut total = BigRational::from(BigInt::from(0));
    for config in &configs {
        let weight = compute_weight(config, args.method, None)?;
        let prob = tensor::probability(config);
        total += &prob;
        rows.push((config.to_string(), weight, prob));
    }
    let payload = json!({
        "command": "table",
        "L": sector.len(),
        "populations": sector.counts().populations(),
        "method": args.method.name(),
        "normalization": z.to_string(),
        "rows": rows.iter().map(|(c, w, p)| json!({
            "config": c,
            "weight": w.to_string(),
            "probability": p.to_string(),
        })).collect::<Vec<_>>(),
        "sum_probability": total.to_string(),
    });
    if args.csv {
        println!("config,weight,probability");
        for (c, w, p) in &rows {
            println!("{c},{w},{p}");
        }
        println!("TOTAL,{z},{total}");
    } else {
        emit(args.json, &payload, || {
            println!("{:<16} {:>12} {:>12}", "config", "weight", "probability");
            for (c, w, p) in &rows {
                println!("{c:<16} {w:>12} {p:>12}");
            }
            println!("Z = {z}, sum of probabilities = {total}");
        });
    }
    if total != BigRational::from(BigInt::from(1)) {
        return Err(CliError::VerificationFailed(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

fn cmd_ancestors(args: AncestorsArgs) -> CliResult {
    let config = parse_config(&args.config, args.species)?;
    let set = pushing::ancestors(&config)?;
    let payload = json!({
        "command": "ancestors",
        "config": config.to_string(),
        "count": set.len(),
        "ancestors": set.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    });
    emit(args.json, &payload, || {
        for a in &set {
            println!("{a}");
        }
        eprintln!("{} ancestors of {config}", set.len());
    });
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CliResult {
    let sector = parse_sector(args.l, &args.p)?;
    let bound = max_states(args.max_states);
    if sector.size() > num_bigint::BigUint::from(bound) {
        return Err(CliError::Bound(format!(
            "sector has {} states, bound is {bound}",
            sector.size()
        )));
    }
    let counts = multiline::empirical_distribution(&sector, args.n, args.seed)?;
    let n = args.n as f64;
    let mut rows = Vec::new();
    let mut all_within = true;
    for config in sector.configurations() {
        let observed = counts.get(&config).copied().unwrap_or(0);
        let exact = tensor::probability(&config);
        let p = exact.to_f64().unwrap_or(f64::NAN);
        let sigma = (n * p * (1.0 - p)).sqrt();
        let within = (observed as f64 - n * p).abs() <= 4.0 * sigma;
        all_within &= within;
        rows.push((config.to_string(), observed, exact.to_string(), within));
    }
    let payload = json!({
        "command": "sample",
        "L": sector.len(),
        "populations": sector.counts().populations(),
        "samples": args.n,
        "seed": args.seed,
        "rows": rows.iter().map(|(c, o, e, w)| json!({
            "config": c,
            "observed": o,
            "frequency": *o as f64 / n,
            "exact_probability": e,
            "within_4_sigma": w,
        })).collect::<Vec<_>>(),
        "pass": all_within,
    });
    emit(args.json, &payload, || {
        println!(
            "{:<16} {:>10} {:>12} {:>14} {:>6}",
            "config", "observed", "frequency", "exact", "4sigma"
        );
        for (c, o, e, w) in &rows {
            println!(
                "{c:<16} {o:>10} {:>12.6} {e:>14} {:>6}",
                *o as f64 / n,
                if *w { "ok" } else { "FAIL" }
            );
        }
    });
    if !all_within {
        return Err(CliError::VerificationFailed(
            "an observed frequency left its 4-sigma band".into(),
        ));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CliResult {
    match args.what {
        VerifyWhat::Quadratic => {
            let d = args.d.unwrap_or(8);
            if d < 3 {
                return Err(CliError::Input("quadratic check needs --d >= 3".into()));
            }
            let report = algebra::check_quadratic(d);
            let pass = report.pass();
            let payload = json!({
                "command": "verify",
                "what": "quadratic",
                "d": d,
                "checks": report.checks,
                "pass": pass,
            });
            emit(args.json, &payload, || {
                for c in &report.checks {
                    println!(
                        "{}: max deviation {} -> {}",
                        c.relation,
                        c.max_abs_deviation,
                        if c.max_abs_deviation == 0 { "ok" } else { "FAIL" }
                    );
                }
            });
            if !pass {
                return Err(CliError::VerificationFailed(
                    "a quadratic relation failed".into(),
                ));
            }
        }
        VerifyWhat::Hats => {
            let n = args
                .n
                .ok_or_else(|| CliError::Input("hats check needs --n".into()))?;
            let d = args.d.unwrap_or(8);
            let report = algebra::check_hat_relations(n, d)?;
            let pass = report.pass();
            let payload = json!({
                "command": "verify",
                "what": "hats",
                "n": n,
                "d": d,
                "relations_checked": report.relations_checked,
                "failures": report.failures,
                "pass": pass,
            });
            emit(args.json, &payload, || {
                println!(
                    "{} hat relations at n={n}, d={d}: {}",
                    report.relations_checked,
                    if pass { "all hold" } else { "FAILURES" }
                );
                for f in &report.failures {
                    println!(
                        "  {} (K={}, J={}) entry ({}, {}): {} != {}",
                        f.relation, f.k, f.j, f.row, f.col, f.lhs, f.rhs
                    );
                }
            });
            if !pass {
                return Err(CliError::VerificationFailed("a hat relation failed".into()));
            }
        }
        VerifyWhat::Stationarity => {
            let n = args
                .n
                .ok_or_else(|| CliError::Input("stationarity check needs --n".into()))?;
            let l = args
                .l
                .ok_or_else(|| CliError::Input("stationarity check needs --l".into()))?;
            let report = algebra::check_stationarity(l, n as usize);
            let pass = report.pass();
            let payload = json!({
                "command": "verify",
                "what": "stationarity",
                "n": n,
                "l": l,
                "configurations_checked": report.configurations_checked,
                "failures": report.failures,
                "pass": pass,
            });
            emit(args.json, &payload, || {
                println!(
                    "stationarity residual zero on {} configurations (n={n}, L={l}): {}",
                    report.configurations_checked,
                    if pass { "ok" } else { "FAILURES" }
                );
                for (config, residual) in &report.failures {
                    println!("  {config}: residual {residual}");
                }
            });
            if !pass {
                return Err(CliError::VerificationFailed(
                    "a stationarity residual is nonzero".into(),
                ));
            }
        }
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> CliResult {
    let sector = parse_sector(args.l, &args.p)?;
    let bound = max_states(args.max_states);
    if args.compare {
        let report = oracle::compare_all_bounded(&sector, bound)?;
        let payload = json!({
            "command": "oracle",
            "compare": true,
            "L": report.l,
            "populations": report.populations,
            "states": report.states,
            "normalization": report.normalization,
            "rows": report.rows,
            "all_agree": report.all_agree,
        });
        if args.csv {
            println!("config,oracle_probability,trace_weight,recursive_weight,multiline_count,factorized_weight,agree");
            for r in &report.rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.config,
                    r.oracle_probability,
                    r.trace_weight,
                    r.recursive_weight,
                    r.multiline_count.as_deref().unwrap_or(""),
                    r.factorized_weight.as_deref().unwrap_or(""),
                    r.agree
                );
            }
        } else {
            emit(args.json, &payload, || {
                println!(
                    "{:<16} {:>14} {:>8} {:>8} {:>10} {:>6}",
                    "config", "oracle P", "trace", "rec", "multiline", "agree"
                );
                for r in &report.rows {
                    println!(
                        "{:<16} {:>14} {:>8} {:>8} {:>10} {:>6}",
                        r.config,
                        r.oracle_probability,
                        r.trace_weight,
                        r.recursive_weight,
                        r.multiline_count.as_deref().unwrap_or("-"),
                        if r.agree { "ok" } else { "FAIL" }
                    );
                }
                println!(
                    "{} states, Z = {}: {}",
                    report.states,
                    report.normalization,
                    if report.all_agree {
                        "all methods agree"
                    } else {
                        "MISMATCH"
                    }
                );
            });
        }
        if !report.all_agree {
            return Err(CliError::VerificationFailed(
                "method disagreement against the oracle".into(),
            ));
        }
        return Ok(());
    }
    let gen = oracle::build_generator_bounded(&sector, bound)?;
    let pi = oracle::stationary(&gen)?;
    let payload = json!({
        "command": "oracle",
        "compare": false,
        "L": sector.len(),
        "populations": sector.counts().populations(),
        "states": gen.dimension(),
        "rows": pi.iter().map(|(c, p)| json!({
            "config": c.to_string(),
            "probability": p.to_string(),
        })).collect::<Vec<_>>(),
    });
    if args.csv {
        println!("config,probability");
        for (c, p) in pi.iter() {
            println!("{c},{p}");
        }
        return Ok(());
    }
    emit(args.json, &payload, || {
        for (c, p) in pi.iter() {
            println!("{c} {p}");
        }
    });
    Ok(())
}

fn cmd_ops(args: OpsArgs) -> CliResult {
    let xs = tensor::build_ansatz(args.n);
    let mut map = BTreeMap::new();
    for (class, x) in xs.iter().enumerate() {
        let monomials: Vec<Value> = x
            .monomial_names()
            .into_iter()
            .map(|(coeff, names)| {
                if coeff == 1 {
                    json!(names)
                } else {
                    json!({ "coeff": coeff, "symbols": names })
                }
            })
            .collect();
        map.insert(format!("X{class}"), monomials);
    }
    let payload = json!({
        "command": "ops",
        "n": args.n,
        "rank": xs[0].rank(),
        "operators": map,
    });
    emit(args.json, &payload, || {
        for (class, x) in xs.iter().enumerate() {
            println!("X_{class} = {x}");
        }
    });
    Ok(())
}
