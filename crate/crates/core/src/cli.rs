//! Command-line front end. Units at this boundary are the conventional ones: SNR in
//! dB, speed in km/h, delay in ms, carrier in GHz, antenna separation in
//! wavelengths. Everything is converted to SI and linear units before it
//! reaches the core.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{eta_basic_arq_exact, eta_closed_form, eta_exact, eta_open_loop};
use crate::channel::{effective_distance, CorrelationModel, ScenarioParams};
use crate::error::Error;
use crate::montecarlo::{estimate, point_seed, McConfig};
use crate::optimize::{optimize_rate_direct, optimize_rate_stationarity, Evaluator, OptResult};
use crate::protocol::{RatePolicy, Scheme};

pub const CSV_HEADER: &str = "axis,axis_value,scheme,method,eta_npcu,std_error,R,sigma,d_eff_m";
pub const OPTIMIZE_FIELDS: [&str; 11] = [
    "scheme",
    "snr_db",
    "sigma",
    "r_min",
    "r_opt",
    "r_opt_closed",
    "eta_closed",
    "eta_exact",
    "eta_mc",
    "mc_std_error",
    "boundary",
];

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Trials used when Monte Carlo drives a rate search.
const MC_SEARCH_TRIALS: u64 = 100_000;
const VALIDATE_MIN_TRIALS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "paharq", version, about = "Predictor-antenna HARQ average-rate toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average rate along one axis for several schemes and methods, as CSV.
    Sweep(SweepArgs),
    /// Optimal initial rate at one operating point.
    Optimize(OptimizeArgs),
    /// Monte Carlo vs quadrature vs closed form over the built-in matrix.
    Validate(ValidateArgs),
    /// Optimized average rate vs speed for every scattering model.
    ScatteringCompare(ScatterArgs),
}

#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    /// SNR in dB.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Mismatch factor; overrides the kinematic model.
    #[arg(long)]
    sigma: Option<f64>,
    /// Vehicle speed in km/h.
    #[arg(long, default_value_t = 100.0)]
    speed_kmh: f64,
    /// Processing delay in ms.
    #[arg(long, default_value_t = 5.0)]
    delta_ms: f64,
    /// Carrier frequency in GHz.
    #[arg(long, default_value_t = 2.68)]
    fc_ghz: f64,
    /// PA-RA separation in wavelengths.
    #[arg(long, default_value_t = 1.5)]
    da_lambda: f64,
    /// Scattering model: jakes, gaussian or rectangular.
    #[arg(long, default_value = "jakes")]
    model: CorrelationModel,
    /// Rate floor R_min in npcu.
    #[arg(long, default_value_t = 2.0)]
    rmin: f64,
    /// Payload K in nats.
    #[arg(long, default_value_t = 100.0)]
    k_nats: f64,
}

#[derive(Debug, Clone, Args)]
struct McArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    SnrDb,
    SpeedKmh,
    Rate,
}

impl Axis {
    fn as_str(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr-db",
            Axis::SpeedKmh => "speed-kmh",
            Axis::Rate => "rate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum MethodArg {
    Closed,
    Exact,
    Mc,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Closed => "closed",
            MethodArg::Exact => "exact",
            MethodArg::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    axis: Axis,
    #[arg(long, allow_negative_numbers = true)]
    start: f64,
    #[arg(long, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long)]
    points: usize,
    /// Comma-separated subset of pa-harq, basic-arq, open-loop, diversity.
    #[arg(long, value_delimiter = ',', default_value = "pa-harq")]
    schemes: Vec<Scheme>,
    /// Comma-separated subset of closed, exact, mc.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "closed,exact,mc")]
    methods: Vec<MethodArg>,
    /// Fixed initial rate in npcu; without it the rate is optimized per point.
    #[arg(long, conflicts_with = "optimize")]
    rate: Option<f64>,
    /// Optimize the rate at every point (the default unless --rate is given).
    #[arg(long)]
    optimize: bool,
    /// Report rates in bits instead of nats.
    #[arg(long)]
    bits: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, default_value = "pa-harq")]
    scheme: Scheme,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    bits: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct ScatterArgs {
    #[arg(long, default_value_t = 60.0)]
    start: f64,
    #[arg(long, default_value_t = 180.0)]
    stop: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long)]
    bits: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn at(context: impl std::fmt::Display, e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Contract(_) => Failure::Usage(format!("{context}: {e}")),
            _ => Failure::Numeric(format!("{context}: {e}")),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => cmd_sweep(&a).map(|s| (s, a.out.clone(), None)),
        Command::Optimize(a) => cmd_optimize(&a).map(|s| (s, a.out.clone(), None)),
        Command::Validate(a) => cmd_validate(&a).map(|(s, ok)| (s, a.out.clone(), Some(ok))),
        Command::ScatteringCompare(a) => cmd_scattering_compare(&a).map(|(s, summary)| {
            let _ = writeln!(stderr, "{summary}");
            (s, a.out.clone(), None)
        }),
    };
    match outcome {
        Ok((text, out, verdict)) => {
            if let Err(e) = emit(&text, out.as_ref(), stdout) {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_FAILURE;
            }
            match verdict {
                Some(false) => {
                    let _ = writeln!(stderr, "validation failed: at least one check is outside its tolerance");
                    EXIT_FAILURE
                }
                _ => EXIT_OK,
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn unit_scale(bits: bool) -> f64 {
    if bits {
        std::f64::consts::LOG2_E
    } else {
        1.0
    }
}

impl ScenarioArgs {
    fn params(&self) -> CliResult<ScenarioParams<f64>> {
        let fc = self.fc_ghz * 1e9;
        let mut p = ScenarioParams::reference(self.speed_kmh / 3.6, db_to_linear(self.snr_db));
        p.delta = self.delta_ms * 1e-3;
        p.fc = fc;
        p.da = self.da_lambda * p.wavelength();
        p.model = self.model;
        if let Some(s) = self.sigma {
            p = p.with_sigma(s);
        }
        p.validate().map_err(|e| Failure::at("scenario", e))?;
        if !(self.rmin > 0.0 && self.rmin < crate::optimize::RATE_CAP) {
            return Err(Failure::Usage(format!("--rmin must lie in (0, 20), got {}", self.rmin)));
        }
        if !(self.k_nats > 0.0 && self.k_nats.is_finite()) {
            return Err(Failure::Usage(format!("--k-nats must be > 0, got {}", self.k_nats)));
        }
        Ok(p)
    }

    fn policy(&self, rate: f64) -> std::result::Result<RatePolicy<f64>, Error> {
        RatePolicy::with_payload(rate, self.rmin, self.k_nats)
    }
}

fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                start + (stop - start) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Rate used for one (scheme, method) cell: fixed, or optimized with the
/// evaluator that matches the method.
fn scheme_rate(
    scheme: Scheme,
    method: MethodArg,
    fixed: Option<f64>,
    params: &ScenarioParams<f64>,
    sigma: f64,
    r_min: f64,
    mc: &McArgs,
) -> std::result::Result<f64, Error> {
    if let Some(r) = fixed {
        return Ok(r);
    }
    let power = params.power;
    Ok(match (scheme, method) {
        (Scheme::PaHarq, MethodArg::Closed) => optimize_rate_stationarity(r_min, sigma, power)?.r_opt,
        (Scheme::PaHarq, _) => optimize_rate_direct(r_min, sigma, power, &Evaluator::ExactIntegral)?.r_opt,
        (Scheme::BasicArq, _) => optimize_rate_direct(r_min, sigma, power, &Evaluator::BasicArq)?.r_opt,
        (Scheme::OpenLoop, _) => optimize_rate_direct(r_min, sigma, power, &Evaluator::OpenLoop)?.r_opt,
        (Scheme::Diversity, _) => diversity_search(params, sigma, r_min, mc)?.r_opt,
    })
}

fn diversity_search(params: &ScenarioParams<f64>, sigma: f64, r_min: f64, mc: &McArgs) -> std::result::Result<OptResult<f64>, Error> {
    let cfg = McConfig::new(mc.trials.min(MC_SEARCH_TRIALS), mc.seed, Scheme::Diversity);
    let seed = point_seed(mc.seed, params, sigma);
    optimize_rate_direct(r_min, sigma, params.power, &Evaluator::MonteCarlo { cfg, seed })
}

/// `(eta, std_error)` of one cell, or `None` when the method does not apply
/// to the scheme.
fn evaluate_cell(
    scheme: Scheme,
    method: MethodArg,
    params: &ScenarioParams<f64>,
    policy: &RatePolicy<f64>,
    sigma: f64,
    mc: &McArgs,
) -> std::result::Result<Option<(f64, f64)>, Error> {
    let power = params.power;
    Ok(match (scheme, method) {
        (Scheme::PaHarq, MethodArg::Closed) => Some((eta_closed_form(policy, sigma, power)?.eta, 0.0)),
        (Scheme::PaHarq, MethodArg::Exact) => Some((eta_exact(policy, sigma, power)?.eta, 0.0)),
        (Scheme::BasicArq, MethodArg::Exact) => Some((eta_basic_arq_exact(policy, sigma, power)?.eta, 0.0)),
        (Scheme::OpenLoop, MethodArg::Closed) => Some((eta_open_loop(policy.rate, power), 0.0)),
        (_, MethodArg::Mc) => {
            let est = estimate(params, policy, &McConfig::new(mc.trials, mc.seed, scheme))?;
            Some((est.mean, est.std_error))
        }
        _ => None,
    })
}

struct Row<'a> {
    axis: &'a str,
    axis_value: f64,
    scheme: &'a str,
    method: &'a str,
    eta: f64,
    std_error: f64,
    rate: f64,
    sigma: f64,
    d_eff: f64,
}

fn push_row(buf: &mut String, r: &Row<'_>, scale: f64) {
    let _ = writeln!(
        buf,
        "{},{},{},{},{},{},{},{},{}",
        r.axis,
        r.axis_value,
        r.scheme,
        r.method,
        r.eta * scale,
        r.std_error * scale,
        r.rate * scale,
        r.sigma,
        r.d_eff
    );
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<String> {
    if a.points < 2 {
        return Err(Failure::Usage(format!("--points must be >= 2, got {}", a.points)));
    }
    if !(a.start < a.stop) || !a.start.is_finite() || !a.stop.is_finite() {
        return Err(Failure::Usage(format!("need --start < --stop, got {} and {}", a.start, a.stop)));
    }
    if a.axis == Axis::SpeedKmh && a.scenario.sigma.is_some() {
        return Err(Failure::Usage("--sigma fixes the mismatch and cannot be combined with a speed axis".into()));
    }
    if a.axis == Axis::Rate && (a.rate.is_some() || a.optimize) {
        return Err(Failure::Usage("--rate and --optimize do not apply to a rate axis".into()));
    }
    if a.axis == Axis::Rate && a.start < a.scenario.rmin {
        return Err(Failure::Usage(format!(
            "rate axis starts at {} below R_min = {}",
            a.start, a.scenario.rmin
        )));
    }
    if a.mc.trials == 0 {
        return Err(Failure::Usage("--trials must be > 0".into()));
    }
    if let Some(r) = a.rate {
        a.scenario.policy(r).map_err(|e| Failure::at("--rate", e))?;
    }
    let base = a.scenario.params()?;
    let mut methods = a.methods.clone();
    methods.sort();
    methods.dedup();
    let scale = unit_scale(a.bits);

    let mut buf = String::new();
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for x in grid(a.start, a.stop, a.points) {
        let mut params = base;
        let mut fixed = a.rate;
        match a.axis {
            Axis::SnrDb => params.power = db_to_linear(x),
            Axis::SpeedKmh => params.v = x / 3.6,
            Axis::Rate => fixed = Some(x),
        }
        let context = format!("{}={x}", a.axis.as_str());
        let corr = params.resolve_sigma().map_err(|e| Failure::at(&context, e))?;
        let d_eff = effective_distance(&params);
        for &scheme in &a.schemes {
            for &method in &methods {
                let cell = || -> std::result::Result<Option<(f64, f64, f64)>, Error> {
                    let rate = scheme_rate(scheme, method, fixed, &params, corr.sigma, a.scenario.rmin, &a.mc)?;
                    let policy = a.scenario.policy(rate)?;
                    Ok(evaluate_cell(scheme, method, &params, &policy, corr.sigma, &a.mc)?.map(|(e, s)| (e, s, rate)))
                };
                let value = cell().map_err(|e| Failure::at(format!("{context} scheme={scheme} method={}", method.as_str()), e))?;
                if let Some((eta, se, rate)) = value {
                    push_row(
                        &mut buf,
                        &Row {
                            axis: a.axis.as_str(),
                            axis_value: x,
                            scheme: scheme.as_str(),
                            method: method.as_str(),
                            eta,
                            std_error: se,
                            rate,
                            sigma: corr.sigma,
                            d_eff,
                        },
                        scale,
                    );
                }
            }
        }
    }
    Ok(buf)
}

#[derive(Debug, Serialize)]
struct OptimizeRecord {
    scheme: Scheme,
    snr_db: f64,
    sigma: f64,
    r_min: f64,
    r_opt: f64,
    r_opt_closed: Option<f64>,
    eta_closed: Option<f64>,
    eta_exact: Option<f64>,
    eta_mc: f64,
    mc_std_error: f64,
    boundary: bool,
}

impl OptimizeRecord {
    fn scaled(mut self, s: f64) -> Self {
        let opt = |v: Option<f64>| v.map(|x| x * s);
        self.r_min *= s;
        self.r_opt *= s;
        self.r_opt_closed = opt(self.r_opt_closed);
        self.eta_closed = opt(self.eta_closed);
        self.eta_exact = opt(self.eta_exact);
        self.eta_mc *= s;
        self.mc_std_error *= s;
        self
    }

    fn csv(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{},{}\n",
            OPTIMIZE_FIELDS.join(","),
            self.scheme,
            self.snr_db,
            self.sigma,
            self.r_min,
            self.r_opt,
            o(self.r_opt_closed),
            o(self.eta_closed),
            o(self.eta_exact),
            self.eta_mc,
            self.mc_std_error,
            self.boundary
        )
    }
}

fn cmd_optimize(a: &OptimizeArgs) -> CliResult<String> {
    if a.mc.trials == 0 {
        return Err(Failure::Usage("--trials must be > 0".into()));
    }
    let params = a.scenario.params()?;
    let sigma = params.resolve_sigma().map_err(|e| Failure::at("scenario", e))?.sigma;
    let (r_min, power) = (a.scenario.rmin, params.power);
    let ctx = format!("optimize scheme={}", a.scheme);
    let run = || -> std::result::Result<OptimizeRecord, Error> {
        let (main, closed) = match a.scheme {
            Scheme::PaHarq => (
                optimize_rate_direct(r_min, sigma, power, &Evaluator::ExactIntegral)?,
                Some(optimize_rate_stationarity(r_min, sigma, power)?),
            ),
            Scheme::OpenLoop => {
                let o = optimize_rate_direct(r_min, sigma, power, &Evaluator::OpenLoop)?;
                (o, Some(o))
            }
            Scheme::BasicArq => (optimize_rate_direct(r_min, sigma, power, &Evaluator::BasicArq)?, None),
            Scheme::Diversity => (diversity_search(&params, sigma, r_min, &a.mc)?, None),
        };
        let policy = a.scenario.policy(main.r_opt)?;
        let eta_exact = match a.scheme {
            Scheme::PaHarq => Some(eta_exact(&policy, sigma, power)?.eta),
            Scheme::BasicArq => Some(eta_basic_arq_exact(&policy, sigma, power)?.eta),
            Scheme::OpenLoop => Some(eta_open_loop(main.r_opt, power)),
            Scheme::Diversity => None,
        };
        let mc = estimate(&params, &policy, &McConfig::new(a.mc.trials, a.mc.seed, a.scheme))?;
        Ok(OptimizeRecord {
            scheme: a.scheme,
            snr_db: a.scenario.snr_db,
            sigma,
            r_min,
            r_opt: main.r_opt,
            r_opt_closed: closed.map(|c| c.r_opt),
            eta_closed: closed.map(|c| c.eta_opt),
            eta_exact,
            eta_mc: mc.mean,
            mc_std_error: mc.std_error,
            boundary: main.boundary,
        })
    };
    let record = run().map_err(|e| Failure::at(&ctx, e))?.scaled(unit_scale(a.bits));
    Ok(match a.format {
        Format::Csv => record.csv(),
        Format::Json => {
            let mut s = serde_json::to_string(&record).map_err(|e| Failure::Numeric(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

/// One line of the validation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub check: &'static str,
    pub sigma: f64,
    pub snr_db: f64,
    pub rate: f64,
    pub reference: f64,
    pub value: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const VALIDATION_SIGMAS: [f64; 2] = [0.1, 0.3];
pub const VALIDATION_SNRS_DB: [f64; 4] = [0.0, 10.0, 20.0, 30.0];
pub const VALIDATION_RATE_OFFSETS: [f64; 3] = [0.5, 1.5, 3.0];
pub const VALIDATION_R_MIN: f64 = 2.0;

/// Monte Carlo against quadrature (3 standard errors) and the closed form
/// against quadrature (5 % relative) on every matrix point.
pub fn validation_matrix(trials: u64, seed: u64) -> crate::Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();
    for &sigma in &VALIDATION_SIGMAS {
        for &snr_db in &VALIDATION_SNRS_DB {
            for &off in &VALIDATION_RATE_OFFSETS {
                let rate = VALIDATION_R_MIN + off;
                let power = db_to_linear(snr_db);
                let policy = RatePolicy::new(rate, VALIDATION_R_MIN)?;
                let params = ScenarioParams::reference(0.0, power).with_sigma(sigma);
                let exact = eta_exact(&policy, sigma, power)?.eta;
                let mc = estimate(&params, &policy, &McConfig::new(trials, seed, Scheme::PaHarq))?;
                let dev = (mc.mean - exact).abs();
                rows.push(ValidationRow {
                    check: "mc-vs-exact",
                    sigma,
                    snr_db,
                    rate,
                    reference: exact,
                    value: mc.mean,
                    deviation: dev,
                    tolerance: 3.0 * mc.std_error,
                    pass: dev <= 3.0 * mc.std_error,
                });
                let closed = eta_closed_form(&policy, sigma, power)?.eta;
                let rel = (closed - exact).abs() / exact;
                rows.push(ValidationRow {
                    check: "closed-vs-exact",
                    sigma,
                    snr_db,
                    rate,
                    reference: exact,
                    value: closed,
                    deviation: rel,
                    tolerance: 0.05,
                    pass: rel <= 0.05,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<(String, bool)> {
    if a.mc.trials < VALIDATE_MIN_TRIALS {
        return Err(Failure::Usage(format!(
            "--trials must be >= {VALIDATE_MIN_TRIALS}, got {}",
            a.mc.trials
        )));
    }
    let rows = validation_matrix(a.mc.trials, a.mc.seed).map_err(|e| Failure::at("validate", e))?;
    let mut buf = String::from("check,sigma,snr_db,R,reference,value,deviation,tolerance,status\n");
    for r in &rows {
        let _ = writeln!(
            buf,
            "{},{},{},{},{},{},{},{},{}",
            r.check,
            r.sigma,
            r.snr_db,
            r.rate,
            r.reference,
            r.value,
            r.deviation,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok((buf, rows.iter().all(|r| r.pass)))
}

/// Optimized closed-form average rate against speed for one model.
pub fn speed_profile(base: &ScenarioParams<f64>, model: CorrelationModel, speeds_kmh: &[f64], r_min: f64) -> crate::Result<Vec<(f64, f64, f64, f64)>> {
    speeds_kmh
        .iter()
        .map(|&v| {
            let mut p = *base;
            p.v = v / 3.6;
            p.model = model;
            p.sigma_override = None;
            let sigma = p.resolve_sigma()?.sigma;
            let opt = optimize_rate_stationarity(r_min, sigma, p.power)?;
            Ok((v, opt.eta_opt, opt.r_opt, sigma))
        })
        .collect()
}

fn cmd_scattering_compare(a: &ScatterArgs) -> CliResult<(String, String)> {
    if a.points == 0 || (a.points > 1 && !(a.start < a.stop)) {
        return Err(Failure::Usage(format!(
            "need --points >= 1 and --start < --stop, got {} points on [{}, {}]",
            a.points, a.start, a.stop
        )));
    }
    if a.scenario.sigma.is_some() {
        return Err(Failure::Usage("--sigma cannot be combined with a speed sweep".into()));
    }
    let base = a.scenario.params()?;
    let speeds = grid(a.start, a.stop, a.points);
    let scale = unit_scale(a.bits);
    let mut profiles = Vec::new();
    for model in CorrelationModel::ALL {
        let prof = speed_profile(&base, model, &speeds, a.scenario.rmin).map_err(|e| Failure::at(format!("model={model}"), e))?;
        profiles.push((model, prof));
    }
    let mut buf = String::new();
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for (i, &v) in speeds.iter().enumerate() {
        let mut p = base;
        p.v = v / 3.6;
        let d_eff = effective_distance(&p);
        for (model, prof) in &profiles {
            let (_, eta, rate, sigma) = prof[i];
            push_row(
                &mut buf,
                &Row {
                    axis: "speed-kmh",
                    axis_value: v,
                    scheme: Scheme::PaHarq.as_str(),
                    method: &format!("closed-{model}"),
                    eta,
                    std_error: 0.0,
                    rate,
                    sigma,
                    d_eff,
                },
                scale,
            );
        }
    }
    let (worst, at) = max_pairwise_deviation(&profiles.iter().map(|(_, p)| p.iter().map(|r| r.1).collect()).collect::<Vec<Vec<f64>>>(), &speeds);
    let summary = format!("max pairwise relative deviation of eta_opt across models: {worst} at {at} km/h");
    Ok((buf, summary))
}

/// Largest `|a-b|/max(a,b)` over model pairs and grid points, with the
/// speed where it occurs.
pub fn max_pairwise_deviation(curves: &[Vec<f64>], speeds: &[f64]) -> (f64, f64) {
    let mut worst = (0.0, speeds.first().copied().unwrap_or(f64::NAN));
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            for (k, (&x, &y)) in curves[i].iter().zip(&curves[j]).enumerate() {
                let denom = x.abs().max(y.abs());
                let dev = if denom > 0.0 { (x - y).abs() / denom } else { 0.0 };
                if dev > worst.0 {
                    worst = (dev, speeds[k]);
                }
            }
        }
    }
    worst
}
