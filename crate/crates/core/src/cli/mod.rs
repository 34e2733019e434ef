//! The `acqgame` command line.
//!
//! Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 a `verify` check failed, 2 usage error (bad flags or values).
//!
//! Any flag may also come from a `key=value` file passed with
//! `--config <path>`; flags on the command line win.

pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    monotonicity_sweep, share_drift, utility_ordering, welfare_ordering, DriftReport, SweepParam, SweepRow,
    UtilityOrdering, WelfareReport,
};
use crate::equilibrium::{solve_equilibria, EquilibriumReport, Regime};
use crate::error::Error;
use crate::game::{delta_quantities, deviation_gains, payoff_matrix, DeltaQuantities, DeviationGains, GameSpec, PayoffMatrix};
use crate::market_model::{fit_loglog_slope, missing_mass_estimate, simulate_consumer, stationary_distribution, MarkovConsumerModel};
use output::{csv_table, flat_csv, json_document, json_table, round_sig, OutputFormat};
use verify::{check_random, check_spec, Check, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "acqgame", version, about = "Equilibria and welfare of the two-firm data acquisition game")]
struct Cli {
    /// key=value file supplying default flag values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Payoffs, deltas, equilibria, orderings, drift and welfare for one game
    Analyze(AnalyzeArgs),
    /// Equilibrium buy probabilities along a price or corpus grid
    Sweep(SweepArgs),
    /// Run the consumer switching chain and compare with its stationary law
    Simulate(SimulateArgs),
    /// Check closed forms against the brute-force oracle and invariants
    Verify(VerifyArgs),
    /// Missing-mass learning curve and its log-log slope
    EstimateRate(EstimateArgs),
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Firm 1's initial data count
    #[arg(long)]
    x: Option<f64>,
    /// Firm 2's initial data count
    #[arg(long)]
    y: Option<f64>,
    /// Size of the corpus for sale
    #[arg(long)]
    n: Option<f64>,
    /// Price of the corpus
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Combined competition exponent
    #[arg(long)]
    beta: Option<f64>,
    /// Learning rate used for welfare
    #[arg(long, default_value_t = GameSpec::DEFAULT_R)]
    r: f64,
}

impl SpecArgs {
    fn build(&self, p: Option<f64>, n: Option<f64>) -> Result<GameSpec, Error> {
        let need = |name: &str, v: Option<f64>| v.ok_or_else(|| Error::Domain(format!("missing required flag --{name}")));
        GameSpec::with_rate(
            need("x", self.x)?,
            need("y", self.y)?,
            need("n", n.or(self.n))?,
            need("p", p.or(self.p))?,
            need("beta", self.beta)?,
            self.r,
        )
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// price or corpus
    #[arg(long)]
    param: SweepParam,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    err1: f64,
    #[arg(long)]
    err2: f64,
    /// Mistakes per day that make the customer switch
    #[arg(long, default_value_t = 1)]
    a: u32,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Lattice resolution of the brute-force oracle
    #[arg(long, default_value_t = 1000)]
    grid: u32,
    /// Extra random specs to check
    #[arg(long, default_value_t = 0)]
    trials: u32,
    /// Required when --trials > 0
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Decay exponent of the query distribution
    #[arg(long)]
    k: f64,
    /// Ascending sample sizes, comma separated
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "100,1000,10000,100000")]
    m: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    trials: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as u64)
    } else {
        Err(format!("expected a positive integer, got {s:?}"))
    }
}

/// Reads `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file values in front of the subcommand's own flags. Keys
/// the subcommand does not accept, or that are also given on the command
/// line, are dropped so that flags win.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => path = Some(it.next().ok_or("--config needs a path")?),
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let entries = parse_config(&text)?;

    let Some(pos) = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(rest);
    };
    let cmd = Cli::command();
    let name = rest[pos].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&name) else { return Ok(rest) };
    let accepted: Vec<String> = sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect();
    let given = |k: &str| {
        rest[pos + 1..].iter().any(|a| {
            let a = a.to_string_lossy();
            a.strip_prefix("--").is_some_and(|f| f == k || f.starts_with(&format!("{k}=")))
        })
    };
    let injected = entries
        .into_iter()
        .filter(|(k, _)| accepted.contains(k) && !given(k))
        .flat_map(|(k, v)| [OsString::from(format!("--{k}")), OsString::from(v)]);
    let mut out: Vec<OsString> = rest[..=pos].to_vec();
    out.extend(injected);
    out.extend(rest[pos + 1..].iter().cloned());
    Ok(out)
}

enum Failure {
    Usage(String),
    /// The report is still data: it goes to stdout alongside the failure.
    Checks { report: String, failed: Vec<String> },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Runs the CLI with `args` (including the program name). Output is only
/// written once the command has succeeded.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match apply_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::EstimateRate(a) => cmd_estimate_rate(a),
    };
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Checks { report, failed }) => {
            let _ = out.write_all(report.as_bytes());
            let _ = writeln!(err, "verification failed: {}", failed.join(", "));
            EXIT_CHECK_FAILED
        }
    }
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    spec: GameSpec,
    payoffs: PayoffMatrix,
    deltas: DeltaQuantities,
    c_equals_d: bool,
    equilibria: EquilibriumReport,
    deviation_gains: DeviationGains,
    utility_ordering: Option<UtilityOrdering>,
    drift: DriftReport,
    welfare: WelfareReport,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, Failure> {
    let spec = args.spec.build(None, None)?;
    let deltas = delta_quantities(&spec);
    let report = AnalyzeReport {
        spec,
        payoffs: payoff_matrix(&spec),
        deltas,
        c_equals_d: (deltas.c - deltas.d).abs() <= crate::EPS,
        equilibria: solve_equilibria(&spec),
        deviation_gains: deviation_gains(&spec),
        utility_ordering: utility_ordering(&spec).ok(),
        drift: share_drift(&spec),
        welfare: welfare_ordering(&spec),
    };
    Ok(match args.format {
        OutputFormat::Json => json_document(&report),
        OutputFormat::Csv => flat_csv(&report),
    })
}

/// A sweep row as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param_value: f64,
    pub regime: String,
    pub q1: f64,
    pub q2: f64,
    pub u1_mixed: f64,
    pub u2_mixed: f64,
    pub drift_mixed: f64,
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        SweepRecord {
            param_value: round_sig(r.param_value),
            regime: r.regime.to_string(),
            q1: round_sig(r.q1),
            q2: round_sig(r.q2),
            u1_mixed: round_sig(r.u1_mixed),
            u2_mixed: round_sig(r.u2_mixed),
            drift_mixed: round_sig(r.drift_mixed),
        }
    }
}

impl SweepRecord {
    pub fn regime(&self) -> Result<Regime, Error> {
        self.regime.parse()
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<String, Failure> {
    if !(args.from < args.to) {
        return Err(Failure::Usage(format!("--from ({}) must be below --to ({})", args.from, args.to)));
    }
    // the swept flag itself may be omitted
    let spec = match args.param {
        SweepParam::Price => args.spec.build(Some(args.spec.p.unwrap_or(args.from)), None)?,
        SweepParam::Corpus => args.spec.build(None, Some(args.spec.n.unwrap_or(args.to)))?,
    };
    let rows = monotonicity_sweep(&spec, args.param, args.from, args.to, args.steps)?;
    let records: Vec<SweepRecord> = rows.iter().map(SweepRecord::from).collect();
    Ok(match args.format {
        OutputFormat::Csv => csv_table(&records),
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Header {
                param: SweepParam,
                spec: GameSpec,
            }
            json_table(&Header { param: args.param, spec }, "rows", &records)
        }
    })
}

/// Output of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRecord {
    pub err1: f64,
    pub err2: f64,
    pub a: u32,
    pub steps: u64,
    pub seed: u64,
    pub empirical1: f64,
    pub empirical2: f64,
    pub analytic1: f64,
    pub analytic2: f64,
    pub abs_deviation: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String, Failure> {
    let model = MarkovConsumerModel::new(args.err1, args.err2, args.a)?;
    if args.steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    let (e1, e2) = simulate_consumer(&model, args.steps, args.seed);
    let (mu1, mu2) = stationary_distribution(&model);
    let rec = SimulateRecord {
        err1: args.err1,
        err2: args.err2,
        a: args.a,
        steps: args.steps,
        seed: args.seed,
        empirical1: round_sig(e1),
        empirical2: round_sig(e2),
        analytic1: round_sig(mu1),
        analytic2: round_sig(mu2),
        abs_deviation: round_sig((e1 - mu1).abs()),
    };
    Ok(match args.format {
        OutputFormat::Json => json_document(&rec),
        OutputFormat::Csv => csv_table(&[rec]),
    })
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    spec: GameSpec,
    regime: Regime,
    passed: bool,
    checks: Vec<Check>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<String, Failure> {
    let spec = args.spec.build(None, None)?;
    if args.grid < 100 {
        return Err(Failure::Usage(format!("--grid must be at least 100, got {}", args.grid)));
    }
    let mut checks = check_spec(&spec, args.grid, true);
    if args.trials > 0 {
        let seed = args.seed.ok_or_else(|| Failure::Usage("--seed is required when --trials > 0".into()))?;
        checks.extend(check_random(args.trials, seed, args.grid));
    }
    let failed: Vec<String> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.clone()).collect();
    let report = VerifyReport { spec, regime: solve_equilibria(&spec).regime, passed: failed.is_empty(), checks };
    let text = match args.format {
        OutputFormat::Json => json_document(&report),
        OutputFormat::Csv => csv_table(&report.checks.iter().map(CheckRecord::from).collect::<Vec<_>>()),
    };
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(Failure::Checks { report: text, failed })
    }
}

#[derive(Debug, Serialize)]
struct CheckRecord {
    name: String,
    status: Status,
    measured: Option<f64>,
    tolerance: Option<f64>,
    detail: String,
}

impl From<&Check> for CheckRecord {
    fn from(c: &Check) -> Self {
        CheckRecord {
            name: c.name.clone(),
            status: c.status,
            measured: c.measured.map(round_sig),
            tolerance: c.tolerance,
            detail: c.detail.clone(),
        }
    }
}

/// One row of `estimate-rate` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub k: f64,
    pub m: u64,
    pub missing_mass: f64,
    pub fitted_slope: Option<f64>,
    pub expected_slope: f64,
}

fn cmd_estimate_rate(args: &EstimateArgs) -> Result<String, Failure> {
    if !(args.k > 1.0) {
        return Err(Failure::Usage(format!("--k must exceed 1, got {}", args.k)));
    }
    if args.m.is_empty() || args.m.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--m must be a strictly ascending list".into()));
    }
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    let estimates = args
        .m
        .iter()
        .enumerate()
        .map(|(i, &m)| missing_mass_estimate(args.k, m, args.trials, crate::market_model::sub_seed(args.seed, i as u64)))
        .collect::<Result<Vec<f64>, Error>>()?;
    let ms: Vec<f64> = args.m.iter().map(|&m| m as f64).collect();
    let slope = fit_loglog_slope(&ms, &estimates).map(round_sig);
    let expected = round_sig(1.0 / args.k - 1.0);
    let records: Vec<RateRecord> = args
        .m
        .iter()
        .zip(&estimates)
        .map(|(&m, &e)| RateRecord { k: args.k, m, missing_mass: round_sig(e), fitted_slope: slope, expected_slope: expected })
        .collect();
    Ok(match args.format {
        OutputFormat::Csv => csv_table(&records),
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Header {
                k: f64,
                trials: u32,
                seed: u64,
                fitted_slope: Option<f64>,
                expected_slope: f64,
            }
            let h = Header { k: args.k, trials: args.trials, seed: args.seed, fitted_slope: slope, expected_slope: expected };
            json_table(&h, "estimates", &records)
        }
    })
}
