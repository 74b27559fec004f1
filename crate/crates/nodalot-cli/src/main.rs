//! Command-line interface to the transport solvers: minimizer
//! construction, cost measurement, reductions, the discrete oracle,
//! randomized verification campaigns, and the short-edge sweep table.
//!
//! All subcommands print JSON to stdout, except `sweep-beta`, which
//! prints CSV. Identical invocations produce byte-identical output.
//! Errors are printed as structured JSON on stderr.
//!
//! Exit codes: `0` success, `1` a verification campaign found a property
//! violation, `2` invalid input.

use std::fs;
use std::io::Read as _;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nodalot::{
    closed_form_value, discretize, minimize_circle, minimize_interval,
    minimize_star_closed_form, minimize_star_numeric, minimize_star_short_edge_d3,
    reduce_to_adjacent_steps, run_campaign, short_edge_value, solve_discrete_ot,
    wasserstein_circle, wasserstein_interval, wasserstein_star, CheckKind, ClassSpec, Domain,
    DomainKind, Error, MinimizerResult, StarMethod, StepFunction, TransportPlan,
    VerificationCampaign,
};

#[derive(Parser)]
#[command(
    name = "nodalot",
    version,
    about = "Optimal transport between the parts of zero-mean step functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a cost minimizer over a fixed-norm nodal class.
    Minimize(MinimizeArgs),
    /// Measure W_p between the parts of a step function.
    Wasserstein(MeasureArgs),
    /// Run the cost-decreasing reductions on a step function.
    Reduce(MeasureArgs),
    /// Solve a midpoint discretization with the transportation simplex.
    Oracle(OracleArgs),
    /// Run a randomized verification campaign.
    Verify(VerifyArgs),
    /// Emit the three-edge short-edge sweep as CSV (c₁ = c∞ = 1, p = 1).
    SweepBeta(SweepBetaArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    /// An interval [0, L].
    Interval,
    /// The unit circle (circumference 2π).
    Circle,
    /// A star graph with the given edge lengths.
    Star,
}

#[derive(Args)]
struct MinimizeArgs {
    /// Domain geometry.
    #[arg(long, value_enum)]
    domain: DomainArg,
    /// Interval length L > 0 (interval domain only).
    #[arg(long)]
    length: Option<f64>,
    /// Comma-separated star edge lengths (star domain only).
    #[arg(long, value_delimiter = ',')]
    edges: Option<Vec<f64>>,
    /// Sup-norm constraint c∞ > 0.
    #[arg(long)]
    cinf: f64,
    /// L¹-norm constraint c₁ > 0.
    #[arg(long)]
    c1: f64,
    /// Number of effective nodal points N ≥ 1.
    #[arg(long)]
    n: usize,
    /// Transport exponent p ≥ 1.
    #[arg(long)]
    p: f64,
}

#[derive(Args)]
struct MeasureArgs {
    /// Step-function JSON: a file path, or `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    /// Transport exponent p ≥ 1.
    #[arg(long)]
    p: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// Step-function JSON: a file path, or `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    /// Transport exponent p ≥ 1.
    #[arg(long)]
    p: f64,
    /// Discretization cell width h > 0.
    #[arg(long)]
    h: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random trials.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Master seed for the per-trial RNG streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated checks to run: bound, reduction, sharpness,
    /// oracle, monotonicity (default: all).
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    /// Comma-separated domain kinds to sample: interval, circle, star
    /// (default: all).
    #[arg(long, value_delimiter = ',')]
    domain_kinds: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepBetaArgs {
    /// Number of effective nodal points N ≥ 1.
    #[arg(long)]
    n: usize,
    /// Number of evenly spaced β samples on [0, 1/(3N+1)] (≥ 2).
    #[arg(long, default_value_t = 21)]
    points: usize,
}

/// Cost measurement output: the plan plus domain-specific certificates.
#[derive(Serialize)]
struct Measurement {
    p: f64,
    value: f64,
    /// Optimal cut coordinate (circle only).
    #[serde(skip_serializing_if = "Option::is_none")]
    cut: Option<f64>,
    /// Optimal cumulative level at the cut (circle only).
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    /// How the value was obtained (star only).
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<StarMethod>,
    plan: TransportPlan,
}

/// Oracle output: the discrete optimum and its optimality certificate.
#[derive(Serialize)]
struct OracleOutput {
    p: f64,
    h: f64,
    atoms_plus: usize,
    atoms_minus: usize,
    value: f64,
    max_dual_violation: f64,
    pivots: usize,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorOutput<'a> {
    error: ErrorBody<'a>,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DomainMismatch(_) => "domain_mismatch",
        Error::InvalidInput(_) => "invalid_input",
        Error::Unbalanced { .. } => "unbalanced",
        Error::Degenerate(_) => "degenerate",
        Error::Infeasible(_) => "infeasible",
        Error::Parity(_) => "parity",
        Error::UnsupportedCase(_) => "unsupported_case",
        Error::Precondition(_) => "precondition",
    }
}

fn emit_error(e: &Error) {
    let out = ErrorOutput {
        error: ErrorBody { kind: error_kind(e), message: e.to_string() },
    };
    eprintln!("{}", serde_json::to_string_pretty(&out).expect("error serialization"));
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serialization"));
}

/// Formats a float with 17 significant digits, enough to round-trip.
fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_function(input: &str) -> Result<StepFunction, Error> {
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::InvalidInput(format!("reading stdin: {e}")))?;
        buf
    } else {
        fs::read_to_string(input)
            .map_err(|e| Error::InvalidInput(format!("reading {input}: {e}")))?
    };
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("parsing step-function JSON: {e}")))
}

fn build_domain(args: &MinimizeArgs) -> Result<Domain, Error> {
    match args.domain {
        DomainArg::Interval => {
            if args.edges.is_some() {
                return Err(Error::InvalidInput(
                    "--edges applies only to the star domain".into(),
                ));
            }
            let length = args.length.ok_or_else(|| {
                Error::InvalidInput("the interval domain requires --length".into())
            })?;
            Ok(Domain::Interval { length })
        }
        DomainArg::Circle => {
            if args.length.is_some() || args.edges.is_some() {
                return Err(Error::InvalidInput(
                    "the circle takes neither --length nor --edges".into(),
                ));
            }
            Ok(Domain::Circle)
        }
        DomainArg::Star => {
            if args.length.is_some() {
                return Err(Error::InvalidInput(
                    "--length applies only to the interval domain".into(),
                ));
            }
            let edges = args.edges.clone().ok_or_else(|| {
                Error::InvalidInput("the star domain requires --edges".into())
            })?;
            Ok(Domain::Star { edges })
        }
    }
}

/// Star minimization: closed forms where they apply, otherwise the
/// numeric solver. Falls through only on case-coverage errors; real
/// input problems (infeasibility etc.) propagate immediately.
fn minimize_star_any(spec: &ClassSpec, p: f64) -> Result<MinimizerResult, Error> {
    let fall_through = |e: &Error| matches!(e, Error::UnsupportedCase(_) | Error::Precondition(_));
    match minimize_star_closed_form(spec, p) {
        Ok(res) => return Ok(res),
        Err(e) if fall_through(&e) => {}
        Err(e) => return Err(e),
    }
    match minimize_star_short_edge_d3(spec, p) {
        Ok(res) => return Ok(res),
        Err(e) if fall_through(&e) => {}
        Err(e) => return Err(e),
    }
    minimize_star_numeric(spec, p)
}

fn cmd_minimize(args: &MinimizeArgs) -> Result<(), Error> {
    let domain = build_domain(args)?;
    let spec = ClassSpec {
        c_inf: args.cinf,
        c_1: args.c1,
        n_nodal: args.n,
        domain,
    };
    let result = match args.domain {
        DomainArg::Interval => minimize_interval(&spec, args.p)?,
        DomainArg::Circle => minimize_circle(&spec, args.p)?,
        DomainArg::Star => minimize_star_any(&spec, args.p)?,
    };
    print_json(&result);
    Ok(())
}

fn cmd_wasserstein(args: &MeasureArgs) -> Result<(), Error> {
    let f = read_function(&args.input)?;
    let m = match f.domain() {
        Domain::Interval { .. } => {
            let (value, plan) = wasserstein_interval(&f, args.p)?;
            Measurement { p: args.p, value, cut: None, level: None, method: None, plan }
        }
        Domain::Circle => {
            let sol = wasserstein_circle(&f, args.p)?;
            Measurement {
                p: args.p,
                value: sol.value,
                cut: Some(sol.cut),
                level: Some(sol.level),
                method: None,
                plan: sol.plan,
            }
        }
        Domain::Star { .. } => {
            let sol = wasserstein_star(&f, args.p)?;
            Measurement {
                p: args.p,
                value: sol.value,
                cut: None,
                level: None,
                method: Some(sol.method),
                plan: sol.plan,
            }
        }
    };
    print_json(&m);
    Ok(())
}

fn cmd_reduce(args: &MeasureArgs) -> Result<(), Error> {
    let f = read_function(&args.input)?;
    let reduction = reduce_to_adjacent_steps(&f, args.p)?;
    print_json(&reduction);
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), Error> {
    let f = read_function(&args.input)?;
    let pair = discretize(&f, args.h)?;
    let atoms_plus = pair.plus.len();
    let atoms_minus = pair.minus.len();
    let sol = solve_discrete_ot(f.domain(), &pair, args.p)?;
    print_json(&OracleOutput {
        p: args.p,
        h: args.h,
        atoms_plus,
        atoms_minus,
        value: sol.value,
        max_dual_violation: sol.max_dual_violation,
        pivots: sol.pivots,
    });
    Ok(())
}

fn parse_list<T: Clone + FromStr<Err = Error>>(
    items: &Option<Vec<String>>,
    all: &[T],
) -> Result<Vec<T>, Error> {
    match items {
        None => Ok(all.to_vec()),
        Some(names) => names.iter().map(|s| s.parse()).collect(),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Error> {
    let campaign = VerificationCampaign {
        trials: args.trials,
        seed: args.seed,
        checks: parse_list(&args.checks, &CheckKind::ALL)?,
        domain_kinds: parse_list(
            &args.domain_kinds,
            &[DomainKind::Interval, DomainKind::Circle, DomainKind::Star],
        )?,
        threads: None,
    };
    let report = run_campaign(&campaign)?;
    print_json(&report);
    Ok(report.all_passed())
}

fn cmd_sweep_beta(args: &SweepBetaArgs) -> Result<(), Error> {
    if args.n < 1 {
        return Err(Error::InvalidInput("--n must be at least 1".into()));
    }
    if args.points < 2 {
        return Err(Error::InvalidInput("--points must be at least 2".into()));
    }
    let n = args.n;
    let beta_star = 1.0 / (3.0 * n as f64 + 1.0);
    let odd = closed_form_value(1.0, 1.0, n as f64 - 1.0 + 4.0 / 3.0, 1.0);
    let interval = closed_form_value(1.0, 1.0, n as f64, 1.0);
    let mut out = String::from("beta,short_edge_value,odd_long_edge_value,interval_value\n");
    for i in 0..args.points {
        let beta = beta_star * i as f64 / (args.points - 1) as f64;
        let short = short_edge_value(1.0, 1.0, n, beta);
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_float(beta),
            csv_float(short),
            csv_float(odd),
            csv_float(interval)
        ));
    }
    print!("{out}");
    Ok(())
}

/// Applies the NODALOT_THREADS cap to the global worker pool.
fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("NODALOT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "NODALOT_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        emit_error(&e);
        return ExitCode::from(2);
    }
    let outcome = match &cli.command {
        Command::Minimize(args) => cmd_minimize(args).map(|()| true),
        Command::Wasserstein(args) => cmd_wasserstein(args).map(|()| true),
        Command::Reduce(args) => cmd_reduce(args).map(|()| true),
        Command::Oracle(args) => cmd_oracle(args).map(|()| true),
        Command::Verify(args) => cmd_verify(args),
        Command::SweepBeta(args) => cmd_sweep_beta(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            emit_error(&e);
            ExitCode::from(2)
        }
    }
}
