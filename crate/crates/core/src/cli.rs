//! The `polyclt` command line front end.
//!
//! Every subcommand reads files, writes one JSON or CSV result, and exits
//! with 0 on success, 2 when the input is rejected, 3 when a numerical step
//! fails (a diagnostic JSON is still written) and 64 on usage errors. JSON
//! outputs embed a [`RunManifest`]; floats are written in shortest
//! round-trip form and CSV values as `{:.16e}`, so re-reading reproduces
//! every bit.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constraint_model::{positivize, validate, ConstraintSystem, ModelError};
use crate::diagnostics::{self, ColumnLaw, DiagnosticsError, InstanceRecipe};
use crate::entropy_center::{solve_barycenter, Barycenter, BarycenterOptions, CenterError};
use crate::fourier::{bartlett_cf, gamma_box_probability, gaussian_limit, mixture_box_probability, BoxSet, QuadOptions};
use crate::samplers::{map_points, SamplerConfig, SamplerKind};
use crate::standardization::{
    assumption_report, property_a_partition, standardize, weight_spec, PartitionOptions, StandardizedSystem,
    DEFAULT_COLUMN_THRESHOLD,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "polyclt", version, about = "Entropy barycenters and limit-theorem checks for polytopes {x >= 0 : Ax = b}")]
struct Cli {
    /// Worker threads for chains and quadrature (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Instance JSON, or a headerless CSV matrix for A together with --rhs.
    #[arg(long)]
    input: PathBuf,
    /// One-line CSV with b when --input is a CSV matrix.
    #[arg(long)]
    rhs: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct CenterArgs {
    /// Barycenter JSON from `polyclt barycenter`; solved on the fly when absent.
    #[arg(long)]
    barycenter: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Method {
    #[value(name = "hitrun")]
    HitRun,
    Dirichlet,
    Exp,
}

impl From<Method> for SamplerKind {
    fn from(m: Method) -> Self {
        match m {
            Method::HitRun => SamplerKind::HitAndRun,
            Method::Dirichlet => SamplerKind::DirichletExact,
            Method::Exp => SamplerKind::ExpProduct,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct DrawArgs {
    #[arg(long, value_enum, default_value = "hitrun")]
    method: Method,
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
}

impl DrawArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            kind: self.method.into(),
            count: self.count,
            seed: self.seed,
            burn_in: self.burn_in,
            thin: self.thin,
            chains: self.chains,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank, compactness, interior and column-removal checks.
    Validate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rewrite the system with strictly positive A and b.
    Positivize {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the dual problem for the entropy barycenter.
    Barycenter {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Standardized matrix, σ for optional weights, and the assumption report.
    Standardize {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        /// Weights λ, one value per column (comma or newline separated).
        #[arg(long)]
        lambda: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_COLUMN_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search for a certified column partition and report assumption diagnostics.
    Check {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long = "K", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_COLUMN_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw points and write them as CSV, one point per row.
    Sample {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[command(flatten)]
        draw: DrawArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// KS test of the standardized linear statistic against N(0, 1).
    Clt {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[command(flatten)]
        draw: DrawArgs,
        /// Weights λ; a seeded random unit λ̂ is used when absent.
        #[arg(long)]
        lambda: Option<PathBuf>,
        /// Points from `polyclt sample` instead of drawing new ones.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Also write the per-sample statistic values here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// KS tests of w_j X_j against Exp(1) and pairwise correlations.
    Marginal {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[command(flatten)]
        draw: DrawArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        coords: Vec<usize>,
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Characteristic function of the linear statistic by cubature; CSV output.
    Charfn {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long = "t", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long = "quad-tol", default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Probability of a box under the uniform law via the mixture formula.
    Mixture {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        /// JSON {"lo": [...], "hi": [...]}; "inf" is allowed in hi.
        #[arg(long = "box")]
        box_file: PathBuf,
        #[arg(long = "quad-tol", default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Probability of a box under the Gaussian-penalty density.
    Gammabox {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "box")]
        box_file: PathBuf,
        #[arg(long = "quad-tol", default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Random instance whose dual optimum is n·v.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// `box:lo,hi` or `support:p1;p2;...` with comma separated points.
        #[arg(long)]
        law: String,
        #[arg(long, value_delimiter = ',')]
        v: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Positivize { .. } => "positivize",
            Command::Barycenter { .. } => "barycenter",
            Command::Standardize { .. } => "standardize",
            Command::Check { .. } => "check",
            Command::Sample { .. } => "sample",
            Command::Clt { .. } => "clt",
            Command::Marginal { .. } => "marginal",
            Command::Charfn { .. } => "charfn",
            Command::Mixture { .. } => "mixture",
            Command::Gammabox { .. } => "gammabox",
            Command::Gen { .. } => "gen",
        }
    }

    fn output(&self) -> Option<&Path> {
        match self {
            Command::Validate { output, .. }
            | Command::Positivize { output, .. }
            | Command::Barycenter { output, .. }
            | Command::Standardize { output, .. }
            | Command::Check { output, .. }
            | Command::Sample { output, .. }
            | Command::Clt { output, .. }
            | Command::Marginal { output, .. }
            | Command::Charfn { output, .. }
            | Command::Mixture { output, .. }
            | Command::Gammabox { output, .. }
            | Command::Gen { output, .. } => output.as_deref(),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Sample { draw, .. } | Command::Clt { draw, .. } | Command::Marginal { draw, .. } => Some(draw.seed),
            Command::Check { seed, .. } | Command::Gen { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one output file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_clock_seconds: f64,
}

#[derive(Debug)]
enum Failure {
    /// Input rejected; exit 2.
    Invalid(String),
    /// A report was written but says the input fails its checks; exit 2.
    Rejected(Value),
    /// Exit 3 with a diagnostic JSON.
    Numerical { kind: &'static str, message: String },
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Lp(lp) => Failure::Numerical { kind: "lp", message: lp.to_string() },
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<CenterError> for Failure {
    fn from(e: CenterError) -> Self {
        match e {
            CenterError::Model(m) => m.into(),
            other => Failure::Numerical { kind: "barycenter", message: other.to_string() },
        }
    }
}

impl From<DiagnosticsError> for Failure {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::SupportViolation(_) | DiagnosticsError::BadCoordinates | DiagnosticsError::TooFewSamples { .. } => {
                Failure::Invalid(e.to_string())
            }
            DiagnosticsError::Model(m) => m.into(),
            other => Failure::Numerical { kind: "diagnostics", message: other.to_string() },
        }
    }
}

macro_rules! numerical_from {
    ($($ty:path => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::Numerical { kind: $kind, message: e.to_string() }
            }
        })*
    };
}

numerical_from! {
    crate::standardization::StandardizeError => "standardize",
    crate::standardization::PartitionError => "partition",
    crate::samplers::SamplerError => "sampler",
    crate::fourier::FourierError => "quadrature",
}

type Outcome<T> = Result<T, Failure>;

/// Records the digest of every file the run reads.
struct Session {
    started: Instant,
    inputs: Vec<InputDigest>,
}

impl Session {
    fn read(&mut self, path: &Path) -> Outcome<String> {
        let bytes = fs::read(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        String::from_utf8(bytes).map_err(|_| Failure::Invalid(format!("{} is not UTF-8", path.display())))
    }

    fn manifest(&self, cmd: &Command) -> RunManifest {
        RunManifest {
            subcommand: cmd.name().to_string(),
            inputs: self.inputs.clone(),
            seed: cmd.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// What a subcommand produces.
enum Product {
    Json(Value),
    Csv(String),
}

#[derive(Deserialize)]
struct Block {
    column: Vec<f64>,
    repeat: usize,
}

#[derive(Deserialize)]
struct InstanceDoc {
    #[serde(rename = "A", default)]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default)]
    blocks: Vec<Block>,
}

/// Parses an instance JSON: explicit columns of `A` followed by the
/// expanded `blocks`.
pub fn parse_instance(text: &str) -> Result<ConstraintSystem, String> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| format!("instance JSON: {e}"))?;
    let m = doc.b.len();
    if doc.a.len() != m && !(doc.a.is_empty() && !doc.blocks.is_empty()) {
        return Err(format!("A has {} rows but b has {m} entries", doc.a.len()));
    }
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if let Some(first) = doc.a.first() {
        if doc.a.iter().any(|r| r.len() != first.len()) {
            return Err("rows of A have different lengths".into());
        }
        columns.extend((0..first.len()).map(|j| doc.a.iter().map(|r| r[j]).collect()));
    }
    for block in &doc.blocks {
        if block.column.len() != m {
            return Err(format!("block column has {} entries, expected {m}", block.column.len()));
        }
        columns.extend(std::iter::repeat_n(block.column.clone(), block.repeat));
    }
    let a = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
    ConstraintSystem::new(a, DVector::from_vec(doc.b)).map_err(|e| e.to_string())
}

pub fn instance_json(cs: &ConstraintSystem) -> Value {
    json!({ "A": rows(cs.a()), "b": cs.b().as_slice() })
}

fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// All numbers in a CSV or plain list, separated by commas, whitespace or newlines.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_float(s).ok_or_else(|| format!("not a number: {s:?}")))
        .collect()
}

fn parse_float(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Headerless CSV, one row per line.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_numbers).collect()
}

pub fn format_csv_rows<'a, I: IntoIterator<Item = &'a [f64]>>(rows: I) -> String {
    let mut out = String::new();
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// `{"lo": [...], "hi": [...]}` where entries may also be the strings "inf" or "-inf".
pub fn parse_box(text: &str) -> Result<BoxSet, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("box JSON: {e}"))?;
    let list = |key: &str| -> Result<Vec<f64>, String> {
        v.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| format!("box JSON needs an array {key:?}"))?
            .iter()
            .map(|x| match x {
                Value::Number(n) => n.as_f64().ok_or_else(|| "bad number".to_string()),
                Value::String(s) => parse_float(s).ok_or_else(|| format!("bad bound {s:?}")),
                _ => Err(format!("bad bound {x}")),
            })
            .collect()
    };
    Ok(BoxSet { lo: list("lo")?, hi: list("hi")? })
}

/// `box:lo,hi` or `support:p1;p2;...`.
pub fn parse_law(text: &str) -> Result<ColumnLaw, String> {
    if let Some(rest) = text.strip_prefix("box:") {
        let v = parse_numbers(rest)?;
        if v.len() != 2 {
            return Err("box law needs lo,hi".into());
        }
        return Ok(ColumnLaw::UniformBox { lo: v[0], hi: v[1] });
    }
    if let Some(rest) = text.strip_prefix("support:") {
        let points = rest.split(';').map(parse_numbers).collect::<Result<Vec<_>, _>>()?;
        return Ok(ColumnLaw::FiniteSupport { points });
    }
    Err(format!("unknown law {text:?}; expected box:lo,hi or support:p1;p2"))
}

#[derive(Serialize, Deserialize)]
struct BarycenterDoc {
    w: Vec<f64>,
    lambda0: Vec<f64>,
    dual_value: f64,
    residual: f64,
    iterations: usize,
    #[serde(default)]
    gradient_norm: f64,
}

impl From<&Barycenter> for BarycenterDoc {
    fn from(bc: &Barycenter) -> Self {
        BarycenterDoc {
            w: bc.w.as_slice().to_vec(),
            lambda0: bc.lambda0.as_slice().to_vec(),
            dual_value: bc.dual_value,
            residual: bc.centering_residual,
            iterations: bc.iterations,
            gradient_norm: bc.gradient_norm,
        }
    }
}

fn load_instance(s: &mut Session, args: &InstanceArgs) -> Outcome<ConstraintSystem> {
    let text = s.read(&args.input)?;
    let is_csv = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return parse_instance(&text).map_err(Failure::Invalid);
    }
    let rhs = args.rhs.as_ref().ok_or_else(|| Failure::Invalid("a CSV matrix needs --rhs with b".into()))?;
    let b = parse_numbers(&s.read(rhs)?).map_err(Failure::Invalid)?;
    let a = parse_csv_rows(&text).map_err(Failure::Invalid)?;
    Ok(ConstraintSystem::from_rows(&a, &b)?)
}

fn load_center(s: &mut Session, cs: &ConstraintSystem, args: &CenterArgs) -> Outcome<Barycenter> {
    let Some(path) = &args.barycenter else {
        let opts = BarycenterOptions { tol: args.tol, max_iter: args.max_iter, start: None };
        return Ok(solve_barycenter(cs, &opts)?);
    };
    let doc: BarycenterDoc =
        serde_json::from_str(&s.read(path)?).map_err(|e| Failure::Invalid(format!("barycenter JSON: {e}")))?;
    if doc.w.len() != cs.n() || doc.lambda0.len() != cs.m() {
        return Err(Failure::Invalid("barycenter does not match the instance dimensions".into()));
    }
    Ok(Barycenter {
        w: DVector::from_vec(doc.w),
        lambda0: DVector::from_vec(doc.lambda0),
        dual_value: doc.dual_value,
        centering_residual: doc.residual,
        gradient_norm: doc.gradient_norm,
        iterations: doc.iterations,
        trace: Vec::new(),
    })
}

fn load_lambda(s: &mut Session, path: &Path, n: usize) -> Outcome<DVector<f64>> {
    let v = parse_numbers(&s.read(path)?).map_err(Failure::Invalid)?;
    if v.len() != n {
        return Err(Failure::Invalid(format!("lambda has {} entries, expected {n}", v.len())));
    }
    Ok(DVector::from_vec(v))
}

/// `λ = λ̂ ∘ w` for a standard Gaussian `λ̂` scaled to unit length.
fn random_lambda(ss: &StandardizedSystem, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DVector::<f64>::from_fn(ss.n(), |_, _| StandardNormal.sample(&mut rng));
    let unit: DVector<f64> = &g / g.norm();
    unit.component_mul(&ss.w)
}

fn load_points(s: &mut Session, path: &Path, n: usize) -> Outcome<Vec<Vec<f64>>> {
    let points = parse_csv_rows(&s.read(path)?).map_err(Failure::Invalid)?;
    if points.iter().any(|p| p.len() != n) {
        return Err(Failure::Invalid(format!("sample rows must have {n} entries")));
    }
    Ok(points)
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn quad(tol: f64) -> QuadOptions {
    QuadOptions { tol, ..Default::default() }
}

fn execute(cmd: &Command, s: &mut Session) -> Outcome<Product> {
    match cmd {
        Command::Validate { inst, .. } => {
            let cs = load_instance(s, inst)?;
            let report = validate(&cs)?;
            let body = json!({ "ok": report.all_ok(), "report": report });
            if report.all_ok() {
                Ok(Product::Json(body))
            } else {
                Err(Failure::Rejected(body))
            }
        }
        Command::Positivize { inst, .. } => {
            let cs = load_instance(s, inst)?;
            Ok(Product::Json(instance_json(&positivize(&cs)?)))
        }
        Command::Barycenter { inst, tol, max_iter, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = solve_barycenter(&cs, &BarycenterOptions { tol: *tol, max_iter: *max_iter, start: None })?;
            Ok(Product::Json(serde_json::to_value(BarycenterDoc::from(&bc)).expect("serializable")))
        }
        Command::Standardize { inst, center, lambda, threshold, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            let ss = standardize(&cs, &bc)?;
            let spec = match lambda {
                Some(p) => Some(weight_spec(&ss, &load_lambda(s, p, cs.n())?)),
                None => None,
            };
            let report = assumption_report(&ss, spec.as_ref(), *threshold);
            Ok(Product::Json(json!({
                "w": ss.w.as_slice(),
                "a_hat": rows(&ss.a_hat),
                "b_hat": ss.b_hat.as_slice(),
                "gram": rows(&ss.gram),
                "max_entry": ss.max_entry,
                "orthonormality_defect": ss.orthonormality_defect(),
                "b_identity_defect": ss.b_identity_defect(),
                "weights": spec.map(|w| json!({
                    "lambda": w.lambda.as_slice(),
                    "lambda_hat": w.lambda_hat.as_slice(),
                    "sigma": w.sigma,
                    "sigma_kernel": w.sigma_kernel,
                    "max_lambda_hat": w.max_lambda_hat,
                })),
                "assumptions": report,
            })))
        }
        Command::Check { inst, center, k, epsilon, seed, restarts, threshold, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            let ss = standardize(&cs, &bc)?;
            let report = assumption_report(&ss, None, *threshold);
            let partition = property_a_partition(&ss, *k, *epsilon, &PartitionOptions { restarts: *restarts, seed: *seed })?;
            Ok(Product::Json(json!({ "epsilon": epsilon, "partition": partition, "assumptions": report })))
        }
        Command::Sample { inst, center, draw, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            let start = bc.center();
            let points = map_points(&cs, start.as_slice(), bc.w.as_slice(), &draw.config(), <[f64]>::to_vec)?;
            Ok(Product::Csv(format_csv_rows(points.iter().map(Vec::as_slice))))
        }
        Command::Clt { inst, center, draw, lambda, samples, csv, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            let ss = standardize(&cs, &bc)?;
            let lambda = match lambda {
                Some(p) => load_lambda(s, p, cs.n())?,
                None => random_lambda(&ss, draw.seed),
            };
            let sigma = diagnostics::clt_sigma(&cs, &bc, &lambda)?;
            let values = match samples {
                Some(p) => {
                    let points = load_points(s, p, cs.n())?;
                    diagnostics::clt_values_from_points(&bc, &lambda, sigma, points.iter().map(Vec::as_slice))
                }
                None => {
                    let lam = &lambda;
                    let bcr = &bc;
                    let start = bc.center();
                    map_points(&cs, start.as_slice(), bc.w.as_slice(), &draw.config(), move |x| {
                        diagnostics::clt_values_from_points(bcr, lam, sigma, [x])[0]
                    })?
                }
            };
            if let Some(p) = csv {
                write_text(p, &format_csv_rows(values.iter().map(std::slice::from_ref)))?;
            }
            let report = diagnostics::clt_report(values, sigma, false)?;
            Ok(Product::Json(json!({ "lambda": lambda.as_slice(), "report": report })))
        }
        Command::Marginal { inst, center, draw, coords, samples, csv, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            if coords.is_empty() || coords.iter().any(|&j| j >= cs.n()) {
                return Err(DiagnosticsError::BadCoordinates.into());
            }
            let rows: Vec<Vec<f64>> = match samples {
                Some(p) => load_points(s, p, cs.n())?
                    .iter()
                    .map(|x| coords.iter().map(|&j| bc.w[j] * x[j]).collect())
                    .collect(),
                None => {
                    let start = bc.center();
                    let w = &bc.w;
                    map_points(&cs, start.as_slice(), w.as_slice(), &draw.config(), |x| {
                        coords.iter().map(|&j| w[j] * x[j]).collect::<Vec<f64>>()
                    })?
                }
            };
            if let Some(p) = csv {
                write_text(p, &format_csv_rows(rows.iter().map(Vec::as_slice)))?;
            }
            let values = (0..coords.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
            let report = diagnostics::marginal_report(coords, values, false)?;
            Ok(Product::Json(serde_json::to_value(report).expect("serializable")))
        }
        Command::Charfn { inst, center, lambda, t, quad_tol, .. } => {
            let cs = load_instance(s, inst)?;
            let bc = load_center(s, &cs, center)?;
            let ss = standardize(&cs, &bc)?;
            let spec = weight_spec(&ss, &load_lambda(s, lambda, cs.n())?);
            let q = quad(*quad_tol);
            let mut out = String::from("t,re,im,err,gaussian_limit\n");
            for &ti in t {
                let cf = bartlett_cf(&ss, &spec, ti, &q)?;
                let row = [ti, cf.re, cf.im, cf.abs_error_estimate, gaussian_limit(ti, spec.sigma)];
                out.push_str(&format_csv_rows([&row[..]]));
            }
            Ok(Product::Csv(out))
        }
        Command::Mixture { inst, center, box_file, quad_tol, .. } => {
            let cs = load_instance(s, inst)?;
            let set = parse_box(&s.read(box_file)?).map_err(Failure::Invalid)?;
            let bc = load_center(s, &cs, center)?;
            let p = mixture_box_probability(&cs, &bc, &set, &quad(*quad_tol))?;
            Ok(Product::Json(json!({
                "probability": p.re,
                "abs_error_estimate": p.abs_error_estimate,
                "quad_points": p.quad_points,
                "truncation_radius": p.truncation_radius,
            })))
        }
        Command::Gammabox { inst, center, gamma, box_file, quad_tol, .. } => {
            let cs = load_instance(s, inst)?;
            let set = parse_box(&s.read(box_file)?).map_err(Failure::Invalid)?;
            let bc = load_center(s, &cs, center)?;
            let g = gamma_box_probability(&cs, &bc, *gamma, &set, &quad(*quad_tol))?;
            Ok(Product::Json(serde_json::to_value(g).expect("serializable")))
        }
        Command::Gen { m, n, law, v, seed, .. } => {
            let recipe = InstanceRecipe { m: *m, n: *n, law: parse_law(law).map_err(Failure::Invalid)?, v: v.clone(), seed: *seed };
            let inst = diagnostics::random_instance(&recipe)?;
            let mut body = instance_json(&inst.cs);
            body["exact_lambda0"] = json!(inst.exact_lambda0.as_slice());
            body["recipe"] = serde_json::to_value(&recipe).expect("serializable");
            Ok(Product::Json(body))
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_manifest(mut body: Value, manifest: &RunManifest) -> Value {
    let manifest = serde_json::to_value(manifest).expect("serializable");
    match body.as_object_mut() {
        Some(obj) => {
            obj.insert("manifest".into(), manifest);
            body
        }
        None => json!({ "result": body, "manifest": manifest }),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `argv` (program name first), runs one subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLYCLT_LOG", "error")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut session = Session { started: Instant::now(), inputs: Vec::new() };
    let outcome = match cli.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &mut session)),
            Err(e) => {
                eprintln!("polyclt: cannot start {j} worker threads: {e}");
                return EXIT_USAGE;
            }
        },
        None => execute(&cli.command, &mut session),
    };
    let manifest = session.manifest(&cli.command);
    let out = cli.command.output();
    let (text, code) = match outcome {
        Ok(Product::Json(body)) => (pretty(&with_manifest(body, &manifest)), EXIT_OK),
        Ok(Product::Csv(text)) => (text, EXIT_OK),
        Err(Failure::Rejected(body)) => (pretty(&with_manifest(body, &manifest)), EXIT_INVALID),
        Err(Failure::Invalid(msg)) => {
            eprintln!("polyclt {}: {msg}", manifest.subcommand);
            return EXIT_INVALID;
        }
        Err(Failure::Numerical { kind, message }) => {
            eprintln!("polyclt {}: {message}", manifest.subcommand);
            let body = json!({ "error": { "kind": kind, "message": message } });
            (pretty(&with_manifest(body, &manifest)), EXIT_NUMERICAL)
        }
    };
    match emit(out, &text) {
        Ok(()) => code,
        Err(msg) => {
            eprintln!("polyclt: {msg}");
            EXIT_INVALID
        }
    }
}
