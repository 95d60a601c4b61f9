//! Batch front-end: reads a JSON input, runs one operation and emits a report.
//!
//! Reports are deterministic given the configuration and seed. Exit status:
//! 0 all verdicts pass, 1 a verdict fails (or a numerical error occurs),
//! 2 the input or a flag is invalid, 3 a hypothesis of the operation fails.

use std::fmt::Write as _;
use std::io::Read as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance::{self, SuiteConfig, Tolerances};
use crate::bump_toolkit::{
    bump_from_coercive, coercive_from_plateau, plateau_from_bump, standard_bump, talagrand_bump,
};
use crate::error::{Error, Result};
use crate::indexed::{IndexedVector, NormPair};
use crate::pair_norm::{membership_u, peak_set, slack_xi, SmoothNorm};
use crate::smooth_kernel::KernelFunctions;
use crate::space_operators::{
    boundary_maps, operator_pair, renormed_norm, talagrand_ordinal, talagrand_pair, tensor_norm,
    tensor_pair, verify_talagrand, BoundarySystem, Matrix, OrdinalFunction, VectorField,
};
use crate::unity_partitions::{
    approximation_check, locate_basic_set, reconstruction_index, require_continuous,
    separation_check, BasicSetDescriptor, CoordinatePlateau, StepFunction, Truncation,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Norm value, route and weights of a pair.
    NormEval,
    /// Danskin gradient of a pair in U(L), checked by central differences.
    NormGrad,
    /// Norm value against the brute-force oracle (uses --grid).
    NormOracle,
    /// Near-peak set and the radius of the neighbourhood it governs.
    NormPatch,
    /// Talagrand operator, witness and pair of an ordinal-indexed function.
    OpsTalagrand,
    /// Boundary maps of a vector and the renormed value.
    OpsBoundary,
    /// Tensor pair and norm of a vector field.
    OpsTensor,
    /// Plateau, coercive and bump functions at given points.
    BumpEval,
    /// Basic set of the base around a function on [0, Ω].
    PouLocate,
    /// Samples a basic set and checks that it stays within ε.
    PouCheck,
    /// Runs the acceptance criteria.
    SuiteAcceptance,
}

impl Command {
    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "smooth-renorm", version, about = "Smooth renorming toolkit: JSON in, report out")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Input JSON file; `-` reads standard input.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Tolerance override, repeatable: `--tol oracle_rel=1e-5`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Brute-force grid resolution (at least 2).
    #[arg(long, global = true, default_value_t = 16, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub grid_resolution: usize,
    pub output: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input_path: None,
            seed: 2024,
            tolerances: Tolerances::default(),
            grid_resolution: 16,
            output: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn verdict(name: &str, passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub grid_resolution: usize,
    pub tolerances: Tolerances,
    pub input: Option<Value>,
    pub output: Option<Value>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub error: Option<ErrorInfo>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.tool, self.version, self.command);
        let _ = writeln!(out, "seed {} grid {}", self.seed, self.grid_resolution);
        if let Some(Value::Object(map)) = &self.output {
            for (k, v) in map {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        for v in &self.verdicts {
            let _ = write!(out, "[{}] {}", if v.passed { "PASS" } else { "FAIL" }, v.name);
            if !v.detail.is_empty() {
                let _ = write!(out, ": {}", v.detail);
            }
            out.push('\n');
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error [{}]: {}", e.code, e.message);
        }
        let _ = writeln!(out, "exit {}", self.exit_code);
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}

/// Exit status for an error category.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema(_) | Error::Parameter(_) | Error::Domain(_) | Error::Size(_) => 2,
        Error::HypothesisViolation(_) | Error::Precondition(_) => 3,
        Error::BracketFailure(_)
        | Error::Consistency(_)
        | Error::SamplingExhausted(_)
        | Error::Certification(_) => 1,
    }
}

/// Parses `name=value` tolerance overrides onto the defaults.
pub fn parse_tolerances(items: &[String]) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("--tol expects NAME=VALUE, got {item:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("--tol {name}: {value:?} is not a number")))?;
        tol.set(name.trim(), value)?;
    }
    Ok(tol)
}

fn read_input(path: &Option<PathBuf>) -> Result<Option<Value>> {
    let text = match path {
        None => return Ok(None),
        Some(p) if p.as_os_str() == "-" => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Schema(format!("cannot read standard input: {e}")))?;
            s
        }
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", p.display())))?,
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Schema(format!("input is not valid JSON: {e}")))
}

fn parse<T: DeserializeOwned>(input: &Option<Value>) -> Result<T> {
    let v = input
        .as_ref()
        .ok_or_else(|| Error::Schema("this command needs --input".into()))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Schema(e.to_string()))
}

type Outcome = (Value, Vec<Verdict>);

fn blank_report(config: &RunConfig) -> Report {
    Report {
        tool: "smooth-renorm",
        version: VERSION,
        command: config.command.name(),
        seed: config.seed,
        grid_resolution: config.grid_resolution,
        tolerances: config.tolerances,
        input: None,
        output: None,
        verdicts: Vec::new(),
        passed: false,
        error: None,
        exit_code: 0,
    }
}

fn fail(report: &mut Report, e: &Error) {
    report.exit_code = exit_code(e);
    report.error = Some(ErrorInfo {
        code: e.code(),
        message: e.to_string(),
    });
}

/// Runs one command and assembles its report.
pub fn run(config: &RunConfig) -> Report {
    let mut report = blank_report(config);
    let result = read_input(&config.input_path).and_then(|input| {
        report.input = input.clone();
        dispatch(config, &input)
    });
    match result {
        Ok((output, verdicts)) => {
            report.passed = verdicts.iter().all(|v| v.passed);
            report.exit_code = if report.passed { 0 } else { 1 };
            report.output = Some(output);
            report.verdicts = verdicts;
        }
        Err(e) => fail(&mut report, &e),
    }
    report
}

fn dispatch(cfg: &RunConfig, input: &Option<Value>) -> Result<Outcome> {
    let kernel = KernelFunctions::new(cfg.tolerances.kernel())?;
    let norm = SmoothNorm::new(&kernel);
    match cfg.command {
        Command::NormEval => norm_eval(&norm, parse(input)?),
        Command::NormGrad => norm_grad(&norm, &cfg.tolerances, parse(input)?),
        Command::NormOracle => norm_oracle(&norm, cfg, parse(input)?),
        Command::NormPatch => norm_patch(&norm, parse(input)?),
        Command::OpsTalagrand => ops_talagrand(parse(input)?),
        Command::OpsBoundary => ops_boundary(parse(input)?),
        Command::OpsTensor => ops_tensor(parse(input)?),
        Command::BumpEval => bump_eval(parse(input)?),
        Command::PouLocate => pou_locate(parse(input)?),
        Command::PouCheck => pou_check(cfg, parse(input)?),
        Command::SuiteAcceptance => {
            let opts: SuiteInput = match input {
                None => SuiteInput::default(),
                Some(_) => parse(input)?,
            };
            suite(cfg, opts)
        }
    }
}

fn norm_eval(norm: &SmoothNorm<'_>, p: NormPair) -> Result<Outcome> {
    let e = norm.evaluate(&p);
    let e_inv = (-1.0f64).exp();
    let (nf, nx) = (p.f.sup_norm(), p.x.sup_norm());
    let (lower, upper) = (e_inv * nf.max(0.5 * nx), e_inv * (nf + nx));
    let within = lower <= e.value + 1e-12 && e.value <= upper + 1e-12;
    Ok((
        json!({
            "value": e.value,
            "route": e.route,
            "in_u": membership_u(&p),
            "solution": e.solution,
        }),
        vec![verdict(
            "equivalence_bounds",
            within,
            format!("{lower} <= {} <= {upper}", e.value),
        )],
    ))
}

fn norm_grad(norm: &SmoothNorm<'_>, tol: &Tolerances, p: NormPair) -> Result<Outcome> {
    let g = norm.smooth_norm_gradient(&p)?;
    let h = tol.fd_step;
    let mut fd_f = IndexedVector::new();
    let mut fd_x = IndexedVector::new();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for t in p.joint_support() {
        for component in 0..2 {
            let shifted = |s: f64| {
                let mut q = p.clone();
                let v = if component == 0 { &mut q.f } else { &mut q.x };
                v.set(t.clone(), v.get(&t) + s);
                q
            };
            let fd = (norm.smooth_norm(&shifted(h)) - norm.smooth_norm(&shifted(-h))) / (2.0 * h);
            let exact = if component == 0 { g.df.get(&t) } else { g.dx.get(&t) };
            err = err.max((fd - exact).abs());
            scale = scale.max(exact.abs());
            if component == 0 {
                fd_f.set(t.clone(), fd);
            } else {
                fd_x.set(t.clone(), fd);
            }
        }
    }
    let rel = err / scale.max(f64::MIN_POSITIVE);
    Ok((
        json!({
            "gradient": g,
            "central_differences": {"df": fd_f, "dx": fd_x},
            "relative_error": rel,
        }),
        vec![verdict(
            "central_differences",
            rel <= tol.gradient_rel,
            format!("relative error {rel:.3e}, h = {h:e}"),
        )],
    ))
}

fn norm_oracle(norm: &SmoothNorm<'_>, cfg: &RunConfig, p: NormPair) -> Result<Outcome> {
    let value = norm.smooth_norm(&p);
    let oracle = norm.brute_force_norm(&p, cfg.grid_resolution)?;
    let rel = (value - oracle).abs() / (1.0 + value);
    Ok((
        json!({"value": value, "oracle": oracle, "relative_difference": rel}),
        vec![verdict(
            "oracle_agreement",
            rel <= cfg.tolerances.oracle_rel,
            format!("|value - oracle| / (1 + value) = {rel:.3e}"),
        )],
    ))
}

fn norm_patch(norm: &SmoothNorm<'_>, p: NormPair) -> Result<Outcome> {
    let (n, radius) = norm.local_patch(&p)?;
    Ok((
        json!({
            "near_peak_set": n,
            "peak_set": peak_set(&p),
            "xi": slack_xi(&p),
            "eta": 0.5 * slack_xi(&p),
            "radius": radius,
        }),
        vec![verdict("pair_in_u", true, "")],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TalagrandInput {
    f: OrdinalFunction,
}

fn ops_talagrand(inp: TalagrandInput) -> Result<Outcome> {
    let f = inp.f;
    let tf = talagrand_ordinal(&f);
    let witness = verify_talagrand(&f)?;
    let pair = talagrand_pair(&f);
    let mut half_tf = OrdinalFunction::new(f.domain_bound().clone());
    for (a, v) in tf.iter() {
        half_tf.set(a.clone(), 0.5 * v)?;
    }
    let in_u = membership_u(&pair);
    Ok((
        json!({
            "tf": tf,
            "witness": witness,
            "witness_display": witness.to_string(),
            "pair": {"f": f, "x": half_tf},
            "in_u": in_u,
            "norm": SmoothNorm::default().smooth_norm(&pair),
        }),
        vec![
            verdict("witness_image_nonzero", true, format!("(Tf) at {witness} = {}", tf.get(&witness))),
            verdict("pair_in_u", in_u, ""),
        ],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryInput {
    x: Vec<f64>,
    #[serde(default)]
    functionals: Option<Vec<Vec<f64>>>,
}

fn ops_boundary(inp: BoundaryInput) -> Result<Outcome> {
    let system = match inp.functionals {
        Some(rows) => BoundarySystem::new(rows)?,
        None => BoundarySystem::coordinate(inp.x.len()),
    };
    let pair = boundary_maps(&inp.x, &system)?;
    let attains = system.attains_norm(&inp.x)?;
    let (s, t) = system.operators();
    let in_u = membership_u(&pair);
    let value = if pair.is_zero() || in_u {
        Some(renormed_norm(&inp.x, &s, &t)?)
    } else {
        None
    };
    Ok((
        json!({"pair": pair, "attains_norm": attains, "in_u": in_u, "renormed_norm": value}),
        vec![verdict("pair_in_u_or_zero", pair.is_zero() || in_u, "")],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorInput {
    z: VectorField<usize>,
    #[serde(default)]
    s: Option<Matrix>,
    #[serde(default)]
    t: Option<Matrix>,
}

fn ops_tensor(inp: TensorInput) -> Result<Outcome> {
    let n = inp.z.iter().map(|(k, _)| k + 1).max().unwrap_or(1);
    let s = inp.s.unwrap_or_else(|| Matrix::identity(n));
    let t = inp.t.unwrap_or_else(|| Matrix::talagrand(n));
    let pair = tensor_pair(&inp.z, &s, &t)?;
    let value = tensor_norm(&inp.z, &s, &t)?;
    Ok((
        json!({"pair": pair, "norm": value}),
        vec![verdict("pair_in_u_or_zero", pair.is_zero() || membership_u(&pair), "")],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpInput {
    points: Vec<Vec<f64>>,
    #[serde(default = "half")]
    delta: f64,
    #[serde(default = "one")]
    m: f64,
    #[serde(default = "two")]
    r: f64,
    #[serde(default)]
    operators: Option<OperatorInput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorInput {
    s: Matrix,
    t: Matrix,
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

fn bump_eval(inp: BumpInput) -> Result<Outcome> {
    let dim = inp.points.first().map_or(1, Vec::len);
    if dim == 0 || inp.points.iter().any(|p| p.len() != dim) {
        return Err(Error::Schema("points must share one positive dimension".into()));
    }
    let phi = standard_bump(dim);
    let psi = plateau_from_bump(&phi, inp.delta, inp.m)?;
    let theta = coercive_from_plateau(&psi, inp.r)?;
    let bump = bump_from_coercive(&theta)?;
    let mut rows = Vec::new();
    for x in &inp.points {
        let talagrand = match &inp.operators {
            Some(op) => Some(talagrand_bump(x, &op.s, &op.t)?),
            None => None,
        };
        if let Some(op) = &inp.operators {
            operator_pair(x, &op.s, &op.t)?;
        }
        rows.push(json!({
            "point": x,
            "bump": phi.evaluate(x),
            "plateau": psi.evaluate(x),
            "coercive": theta.evaluate(x),
            "round_trip": bump.evaluate(x),
            "talagrand_bump": talagrand,
        }));
    }
    let bound = bump.support_bound();
    let outside_zero = inp.points.iter().all(|x| match bound {
        Some(b) if bump.norm_of(x) > b => bump.evaluate(x) == 0.0,
        _ => true,
    });
    Ok((
        json!({"support_bound": bound, "values": rows}),
        vec![
            verdict("support_bounded", bound.is_some_and(f64::is_finite), ""),
            verdict("support_nonempty", bump.evaluate(&vec![0.0; dim]) != 0.0, ""),
            verdict("zero_beyond_support", outside_zero, ""),
        ],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LocateInput {
    x: OrdinalFunction,
    eps: f64,
}

fn pou_locate(inp: LocateInput) -> Result<Outcome> {
    require_continuous(&inp.x)?;
    let phi = CoordinatePlateau::standard();
    let res = Truncation::new(inp.x.domain_bound().clone());
    let x = StepFunction::from(&inp.x);
    let approx = approximation_check(&x, inp.eps, &res, &phi)?;
    let d = locate_basic_set(&x, inp.eps, &res, &phi)?;
    let clauses = d.clauses(&x, &res, &phi)?;
    Ok((
        json!({
            "descriptor": d,
            "approximation": approx,
            "reconstruction_index": reconstruction_index(&d.f),
            "clauses_at_x": clauses,
        }),
        vec![
            verdict("contains_x", clauses.iter().all(|&c| c), ""),
            verdict("q_below_r_below_delta", d.q < d.r && d.r < d.delta, ""),
        ],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckInput {
    x: OrdinalFunction,
    eps: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    descriptor: Option<BasicSetDescriptor>,
}

fn default_samples() -> usize {
    1000
}

fn pou_check(cfg: &RunConfig, inp: CheckInput) -> Result<Outcome> {
    if inp.samples == 0 {
        return Err(Error::Parameter("samples must be positive".into()));
    }
    require_continuous(&inp.x)?;
    let phi = CoordinatePlateau::standard();
    let res = Truncation::new(inp.x.domain_bound().clone());
    let d = match inp.descriptor {
        Some(d) => d,
        None => locate_basic_set(&StepFunction::from(&inp.x), inp.eps, &res, &phi)?,
    };
    let rep = separation_check(&inp.x, &d, inp.samples, cfg.seed, &res, &phi)?;
    Ok((
        json!({"descriptor": d, "separation": rep}),
        vec![verdict(
            "separation",
            rep.passed,
            format!("{} violations in {} members", rep.violations, rep.accepted),
        )],
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteInput {
    #[serde(default = "all_criteria")]
    criteria: Vec<u32>,
    #[serde(default = "default_samples")]
    samples: usize,
}

impl Default for SuiteInput {
    fn default() -> Self {
        Self {
            criteria: all_criteria(),
            samples: default_samples(),
        }
    }
}

fn all_criteria() -> Vec<u32> {
    acceptance::CRITERIA.to_vec()
}

fn suite(cfg: &RunConfig, inp: SuiteInput) -> Result<Outcome> {
    let suite_cfg = SuiteConfig {
        seed: cfg.seed,
        grid: cfg.grid_resolution,
        samples: inp.samples,
        tolerances: cfg.tolerances,
    };
    let reports = acceptance::run(&suite_cfg, &inp.criteria)?;
    let checks: usize = reports.iter().map(|r| r.checks).sum();
    let verdicts = reports
        .iter()
        .map(|r| {
            let detail = format!(
                "{}: {} checks, {} failures, worst {:.3e}, limit {:.3e}",
                r.title, r.checks, r.failures, r.worst, r.limit
            );
            verdict(&format!("criterion_{}", r.id), r.passed, detail)
        })
        .collect();
    Ok((json!({"executed_checks": checks, "criteria": reports}), verdicts))
}

/// Parses the process arguments, runs, prints the report and returns the exit status.
pub fn main() -> i32 {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut config = RunConfig {
        command: args.command,
        input_path: args.input,
        seed: args.seed,
        tolerances: Tolerances::default(),
        grid_resolution: args.grid as usize,
        output: args.format,
    };
    let report = match parse_tolerances(&args.tol) {
        Ok(t) => {
            config.tolerances = t;
            run(&config)
        }
        Err(e) => {
            let mut r = blank_report(&config);
            fail(&mut r, &e);
            r
        }
    };
    println!("{}", report.render(config.output).trim_end());
    report.exit_code
}
