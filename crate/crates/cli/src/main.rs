//! `blindid`: command-line front end of the blind-deconvolution laboratory.
//!
//! Exit codes: 0 on success, 2 for invalid arguments, scenarios or failed
//! preconditions, 3 for IO failures, 1 for anything else.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use blindid::bounds::{evaluate, BoundQuery, StabilityMode};
use blindid::ensembles::{CMatrix, ConstraintScenario, Ensemble, EnsembleTag, ScenarioKind};
use blindid::lifting::{mean_isometry_radius, measure};
use blindid::mc::{
    plant_rank_one, run_phase_transition, run_small_ball_grid, run_small_ball_sharp, run_stability_sweep, Sweep,
    TransitionRow, TrialPlan,
};
use blindid::recovery::{certify_strong, certify_weak, solve_scenario, success_threshold, witness_gap};
use blindid::report::{csv_string, json_string, CsvRow, RunManifest};
use blindid::rng::rng_from_seed;
use blindid::Error;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "blindid", version, about = "Identifiability and stability experiments for blind deconvolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an ensemble (D, E) and print it.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Plant a rank-1 matrix, measure it and solve for it.
    #[command(args_override_self = true)]
    Recover(RecoverArgs),
    /// Certify weak or strong identifiability.
    #[command(args_override_self = true)]
    Certify(CertifyArgs),
    /// Evaluate the closed-form bounds for a query.
    #[command(args_override_self = true)]
    Bounds(BoundsArgs),
    /// Estimate small-ball probabilities against their bound.
    #[command(args_override_self = true)]
    Smallball(SmallBallArgs),
    /// Recovery success rate as a function of n.
    #[command(args_override_self = true)]
    Transition(TransitionArgs),
    /// Stability violations as a function of delta.
    #[command(args_override_self = true)]
    Stability(StabilityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Flat key=value file; keys are the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (also read from BLINDID_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for parallel trials.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Shape {
    #[arg(long, default_value = "subspace")]
    kind: ScenarioKind,
    #[arg(long)]
    m1: usize,
    #[arg(long)]
    m2: usize,
    #[arg(long)]
    s1: Option<usize>,
    #[arg(long)]
    s2: Option<usize>,
}

impl Shape {
    fn scenario(&self, n: usize) -> Result<ConstraintScenario, Error> {
        ConstraintScenario::probe(self.kind, n, self.m1, self.m2, self.s1, self.s2)
    }
}

#[derive(Args)]
struct EnsembleArgs {
    /// complex_generic, complex_uniform_ball, real_generic or real_uniform_ball.
    #[arg(long, default_value = "complex_generic")]
    ensemble: String,
    /// Ball radius for uniform-ball ensembles (default: mean-isometry radius).
    #[arg(long)]
    radius: Option<f64>,
}

impl EnsembleArgs {
    fn tag(&self, sc: &ConstraintScenario) -> Result<EnsembleTag, Error> {
        let radius = self.radius.or_else(|| {
            self.ensemble.ends_with("ball").then(|| mean_isometry_radius(sc.n, sc.m1, sc.m2))
        });
        EnsembleTag::parse(&self.ensemble, radius)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    ens: EnsembleArgs,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Norm of the additive measurement noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CertifyMode {
    Weak,
    Strong,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long, value_enum, default_value = "weak")]
    mode: CertifyMode,
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Ball radius R (default: mean-isometry radius).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    /// Upper matrix-norm bound L.
    #[arg(long, default_value_t = 1.0)]
    upper: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SmallBallMode {
    /// Scalar case M = [1], R = 1 against the exact probability.
    Sharp,
    /// Random M against the bound.
    Grid,
}

#[derive(Args)]
struct SmallBallArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "sharp")]
    mode: SmallBallMode,
    #[arg(long, default_value = "0.05,0.1,0.2")]
    rhos: List<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long, default_value_t = 3)]
    max_dim: usize,
}

#[derive(Args)]
struct TransitionArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    /// Comma-separated values of n.
    #[arg(long)]
    n_values: List<usize>,
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Also write a JSON run manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "0,0.3,0.1,0.03")]
    deltas: List<f64>,
    /// Ball radius R (default: mean-isometry radius).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value = "single_point")]
    stability_mode: StabilityMode,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Comma-separated values given as one argument, so a later occurrence
/// replaces an earlier one; the empty string is the empty list.
#[derive(Clone, Debug)]
struct List<T>(Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Self(Vec::new()));
        }
        s.split(',').map(|v| v.trim().parse::<T>().map_err(|e| format!("`{v}`: {e}"))).collect::<Result<_, _>>().map(Self)
    }
}

enum Failure {
    Invalid(String),
    Io(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            Error::LinearAlgebra(_) => Failure::Other(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let args = match config::assemble_args(&Cli::command(), argv, env_seed) {
        Ok(a) => a,
        Err(config::ConfigError::Invalid(m)) => return fail(Failure::Invalid(m)),
        Err(config::ConfigError::Io(m)) => return fail(Failure::Io(m)),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    let (code, msg) = match f {
        Failure::Invalid(m) => (2, m),
        Failure::Io(m) => (3, m),
        Failure::Other(m) => (1, m),
    };
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = match &cli.command {
        Command::Gen(a) => &a.common,
        Command::Recover(a) => &a.common,
        Command::Certify(a) => &a.common,
        Command::Bounds(a) => &a.common,
        Command::Smallball(a) => &a.common,
        Command::Transition(a) => &a.common,
        Command::Stability(a) => &a.common,
    };
    let threads = common.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Other(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Recover(a) => recover(a),
        Command::Certify(a) => certify(a),
        Command::Bounds(a) => bounds(a),
        Command::Smallball(a) => smallball(a),
        Command::Transition(a) => transition(a),
        Command::Stability(a) => stability(a),
    }
}

fn seed(c: &Common) -> u64 {
    c.seed.unwrap_or(DEFAULT_SEED)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// One CSV line per key of a flat JSON object, keys sorted.
fn flat_csv(v: &Value) -> String {
    let obj = v.as_object().expect("flat report");
    let cell = |x: &Value| match x {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let header: Vec<&str> = obj.keys().map(String::as_str).collect();
    let values: Vec<String> = obj.values().map(cell).collect();
    format!("{}\n{}\n", header.join(","), values.join(","))
}

fn emit_object(common: &Common, default: Format, full: &Value, flat: &Value) -> Result<(), Failure> {
    let text = match common.format.unwrap_or(default) {
        Format::Json => json_string(full)?,
        Format::Csv => flat_csv(flat),
    };
    write_text(common.out.as_deref(), &text)
}

fn emit_rows<T: CsvRow>(common: &Common, rows: &[T]) -> Result<(), Failure> {
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_string(rows)?,
        Format::Json => json_string(&rows)?,
    };
    write_text(common.out.as_deref(), &text)
}

fn gen(a: &GenArgs) -> Result<(), Failure> {
    let sc = a.shape.scenario(a.n)?;
    let tag = a.ens.tag(&sc)?;
    let s = seed(&a.common);
    let ens = Ensemble::generate(&sc, tag, s)?;
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let v = json!({
                "scenario": serde_json::to_value(sc).map_err(Error::from)?,
                "ensemble": serde_json::to_value(tag).map_err(Error::from)?,
                "seed": s,
                "d": matrix_json(&ens.d),
                "e": matrix_json(&ens.e),
            });
            write_text(a.common.out.as_deref(), &json_string(&v)?)
        }
        Format::Csv => {
            let mut text = String::from("matrix,row,col,re,im\n");
            for (name, m) in [("d", &ens.d), ("e", &ens.e)] {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        let c = m[(i, j)];
                        text.push_str(&format!("{name},{i},{j},{:?},{:?}\n", c.re, c.im));
                    }
                }
            }
            write_text(a.common.out.as_deref(), &text)
        }
    }
}

fn recover(a: &RecoverArgs) -> Result<(), Failure> {
    let sc = a.shape.scenario(a.n)?;
    let tag = a.ens.tag(&sc)?;
    let s = seed(&a.common);
    let ens = Ensemble::generate(&sc, tag, s)?;
    let mut rng = rng_from_seed(s);
    let m0 = plant_rank_one(&sc, tag.is_real(), &mut rng)?;
    let rec = measure(&ens, &m0, a.noise, &mut rng)?;
    let res = solve_scenario(&ens, &rec.z_tilde, &sc, a.restarts, &mut rng)?.with_truth(&m0)?;
    let err = res.lifted_error.unwrap_or(f64::NAN);
    let flat = json!({
        "residual": res.residual,
        "lifted_error": err,
        "success": err <= success_threshold(&m0),
        "restarts_used": res.restarts_used,
        "supports_visited": res.supports_visited,
    });
    let mut full = flat.clone();
    full["support"] = match &res.support {
        Some((s1, s2)) => json!({"s1": s1, "s2": s2}),
        None => Value::Null,
    };
    full["m_hat"] = matrix_json(res.m_hat.matrix());
    full["m0"] = matrix_json(m0.matrix());
    emit_object(&a.common, Format::Json, &full, &flat)
}

fn certify(a: &CertifyArgs) -> Result<(), Failure> {
    let sc = a.shape.scenario(a.n)?;
    let tag = a.ens.tag(&sc)?;
    let s = seed(&a.common);
    let ens = Ensemble::generate(&sc, tag, s)?;
    let mut rng = rng_from_seed(s);
    let (mode, verdict) = match a.mode {
        CertifyMode::Weak => {
            let m0 = plant_rank_one(&sc, tag.is_real(), &mut rng)?;
            ("weak", certify_weak(&ens, &m0, &sc, a.budget, a.tol, &mut rng)?)
        }
        CertifyMode::Strong => ("strong", certify_strong(&ens, &sc, a.budget, a.tol, &mut rng)?),
    };
    let gap = match (&verdict.witness, &verdict.reference) {
        (Some(w), Some(r)) => Some(witness_gap(&ens, w, r)?),
        _ => None,
    };
    let flat = json!({
        "mode": mode,
        "status": verdict.status.as_str(),
        "search_budget": verdict.search_budget,
        "tolerance": verdict.tolerance,
        "verified": verdict.verify(&ens)?,
        "witness_residual": gap.map(|g| g.0),
        "witness_line_distance": gap.map(|g| g.1),
    });
    let mut full = flat.clone();
    full["witness"] = verdict.witness.as_ref().map_or(Value::Null, |w| matrix_json(w.matrix()));
    full["reference"] = verdict.reference.as_ref().map_or(Value::Null, |r| matrix_json(r.matrix()));
    emit_object(&a.common, Format::Json, &full, &flat)
}

fn bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let sc = a.shape.scenario(a.n)?;
    let query = BoundQuery {
        scenario: sc,
        delta: a.delta,
        epsilon: a.epsilon,
        radius: a.radius,
        rho: a.rho,
        ell: a.ell,
        upper: a.upper,
        sigma: a.sigma,
    };
    let report = serde_json::to_value(evaluate(&query)?).map_err(Error::from)?;
    emit_object(&a.common, Format::Json, &report, &report)
}

fn smallball(a: &SmallBallArgs) -> Result<(), Failure> {
    let s = seed(&a.common);
    let rows = match a.mode {
        SmallBallMode::Sharp => run_small_ball_sharp(&a.rhos.0, a.trials, s)?,
        SmallBallMode::Grid => run_small_ball_grid(a.cases, a.max_dim, &a.rhos.0, a.trials, s)?,
    };
    emit_rows(&a.common, &rows)
}

fn write_manifest(path: Option<&Path>, command: &str, plan: &TrialPlan) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let manifest = RunManifest::new(command, plan)?;
    write_text(Some(path), &json_string(&manifest)?)
}

fn transition(a: &TransitionArgs) -> Result<(), Failure> {
    let Some(&first) = a.n_values.0.first() else {
        a.shape.scenario(1)?;
        return emit_rows::<TransitionRow>(&a.common, &[]);
    };
    let sc = a.shape.scenario(first)?;
    let tag = a.ens.tag(&sc)?;
    let mut plan = TrialPlan::new(sc, tag, a.trials, seed(&a.common), Sweep::N(a.n_values.0.clone()));
    plan.restarts = a.restarts;
    plan.noise_level = a.noise;
    let rows = run_phase_transition(&plan)?;
    write_manifest(a.manifest.as_deref(), "transition", &plan)?;
    emit_rows(&a.common, &rows)
}

fn stability(a: &StabilityArgs) -> Result<(), Failure> {
    let sc = a.shape.scenario(a.n)?;
    let radius = a.radius.unwrap_or_else(|| mean_isometry_radius(sc.n, sc.m1, sc.m2));
    let tag = EnsembleTag::ComplexUniformBall { radius };
    let mut plan = TrialPlan::new(sc, tag, a.trials, seed(&a.common), Sweep::Delta(a.deltas.0.clone()));
    plan.restarts = a.restarts;
    plan.mode = a.stability_mode;
    let rows = run_stability_sweep(&plan)?;
    write_manifest(a.manifest.as_deref(), "stability", &plan)?;
    emit_rows(&a.common, &rows)
}
