//! Config-driven batch runner for the pentaband library.
//!
//! A run reads one JSON document, dispatches to a subcommand and writes its
//! reports plus `manifest.json` into an output directory.

use pentaband::diagnostics::{empirical_independence, localization_profile, truncated_spectrum};
use pentaband::halfline::{discriminant_profile, find_eigenvalues_with, minimal_k0, FindOptions, HalfLine};
use pentaband::lyapunov::{convergents, estimate_gamma, gamma_profile, gordon_ratio, uniform_grid};
use pentaband::model::{ModelError, Variant};
use pentaband::periodic::{band_arcs, band_functions, nu_phases, two_periodic_closed_form, two_valued_parameters, x_grid};
use pentaband::realify::verify_algebra;
use pentaband::report::{emit_plotdata, SiteVector, BAND_FUNCTIONS, GAMMA_PROFILE, MEDIAN_VECTOR};
use pentaband::transfer::{propagate, residual, transfer_general, transfer_reduced_at, PropagateOptions};
use pentaband::window::{assemble, EdgeCompletion};
use pentaband::{PhaseModel, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Lyapunov,
    Bands,
    Halfline,
    Truncspec,
    Localize,
    Independence,
    Gordon,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Lyapunov => "lyapunov",
            Command::Bands => "bands",
            Command::Halfline => "halfline",
            Command::Truncspec => "truncspec",
            Command::Localize => "localize",
            Command::Independence => "independence",
            Command::Gordon => "gordon",
        }
    }

    fn needs_seed(self) -> bool {
        matches!(self, Command::Verify | Command::Lyapunov)
    }
}

/// Numeric knobs shared by the subcommands; each reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Spectral-parameter grid size (lyapunov, halfline profile, gordon).
    pub grid: usize,
    /// Transfer steps per Lyapunov estimate.
    pub steps: usize,
    /// Random draws (verify) or angle samples (independence).
    pub samples: usize,
    /// Truncated window size.
    pub sites: usize,
    /// Quasi-momentum grid size for the band functions.
    pub x_points: usize,
    /// Half-line start; the smallest admissible value when absent.
    pub k0: Option<i64>,
    pub resolution: usize,
    pub tol: f64,
    pub max_harmonic: i32,
    /// Largest convergent denominator for gordon.
    pub max_q: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            grid: 64,
            steps: 20_000,
            samples: 1000,
            sites: 512,
            x_points: 256,
            k0: None,
            resolution: 400,
            tol: 1e-10,
            max_harmonic: 2,
            max_q: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Phase model document.
    pub model: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit status 2.
    Config(String),
    /// Numeric failure or exceeded budget; exit status 1.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pentaband::Error> for CliError {
    fn from(e: pentaband::Error) -> Self {
        match e {
            pentaband::Error::Model(m) => CliError::Config(model_message(&m)),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {e}"))
    }
}

fn model_message(e: &ModelError) -> String {
    match e {
        ModelError::Parse { path, message } => format!("field `model.{path}`: {message}"),
        other => format!("field `model`: {other}"),
    }
}

/// Parse a config document, reporting line, column and field path.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.inner();
        CliError::Config(format!("line {} column {}, field `{}`: {}", inner.line(), inner.column(), path, inner))
    })
}

/// Config after the command line has been folded in and checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    pub config: RunConfig,
    pub model: PhaseModel,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn resolve(command: Command, mut config: RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Result<Resolved, CliError> {
    if let Some(c) = config.command {
        if c != command {
            return Err(CliError::Config(format!("field `command`: config is for `{}`, invoked as `{}`", c.name(), command.name())));
        }
    }
    config.command = Some(command);
    if seed.is_some() {
        config.seed = seed;
    }
    if out.is_some() {
        config.out = out;
    }
    let out = config.out.clone().ok_or_else(|| CliError::Config("field `out`: no output directory (set `out` or pass --out)".into()))?;
    if command.needs_seed() && config.seed.is_none() {
        return Err(CliError::Config(format!("field `seed`: `{}` draws random numbers and needs a seed", command.name())));
    }
    check_params(command, &config.params)?;
    let model = PhaseModel::from_value(config.model.clone()).map_err(|e| CliError::Config(model_message(&e)))?;
    let seed = config.seed;
    Ok(Resolved { command, config, model, seed, out })
}

fn check_params(command: Command, p: &Params) -> Result<(), CliError> {
    let bad = |field: &str, why: &str| Err(CliError::Config(format!("field `params.{field}`: {why}")));
    match command {
        Command::Verify if p.samples == 0 => bad("samples", "must be positive"),
        Command::Lyapunov if p.grid == 0 => bad("grid", "must be positive"),
        Command::Bands if p.x_points == 0 => bad("x_points", "must be positive"),
        Command::Halfline if p.resolution == 0 => bad("resolution", "must be positive"),
        Command::Halfline if p.tol.is_nan() || p.tol <= 0.0 => bad("tol", "must be positive"),
        Command::Truncspec | Command::Localize if p.sites < 2 => bad("sites", "must be at least 2"),
        Command::Independence if p.samples < 2 => bad("samples", "must be at least 2"),
        Command::Independence if p.max_harmonic < 1 => bad("max_harmonic", "must be at least 1"),
        Command::Gordon if p.grid == 0 => bad("grid", "must be positive"),
        _ => Ok(()),
    }
}

/// Outcome of a run: files written, relative to the output directory.
#[derive(Debug)]
pub struct RunOutcome {
    pub outputs: Vec<String>,
    /// `false` only when `verify` found a failing check.
    pub passed: bool,
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> pentaband::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, buf)
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }
}

/// Execute a resolved run and write its manifest.
pub fn run(r: &Resolved) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    fs::create_dir_all(&r.out).map_err(|e| CliError::Config(format!("field `out`: cannot create {}: {e}", r.out.display())))?;
    let mut sink = Sink { dir: &r.out, written: Vec::new() };
    let p = &r.config.params;
    let passed = match r.command {
        Command::Verify => verify(&r.model, p, r.seed.expect("checked in resolve"), &mut sink)?,
        Command::Lyapunov => {
            let profile = gamma_profile(&uniform_grid(p.grid), &r.model, p.steps, r.seed.expect("checked in resolve"))?;
            sink.csv(GAMMA_PROFILE, |w| profile.write_csv(w))?;
            true
        }
        Command::Bands => bands(&r.model, p, &mut sink)?,
        Command::Halfline => halfline(&r.model, p, &mut sink)?,
        Command::Truncspec => {
            let cloud = truncated_spectrum(&r.model, p.sites, false)?;
            sink.json("spectrum.json", &cloud)?;
            true
        }
        Command::Localize => localize(&r.model, p, r.seed, &mut sink)?,
        Command::Independence => {
            let rep = empirical_independence(&r.model, p.samples, p.max_harmonic)?;
            let doc = json!({ "report": rep, "bound": rep.bound(), "factorizes": rep.factorizes() });
            sink.json("independence.json", &doc)?;
            true
        }
        Command::Gordon => gordon(&r.model, p, &mut sink)?,
    };
    let mut outputs = sink.written;
    let manifest = json!({
        "command": r.command.name(),
        "config": r.config,
        "model": r.model.to_value(),
        "seed": r.seed,
        "versions": { "pentaband": env!("CARGO_PKG_VERSION") },
        "threads": rayon::current_num_threads(),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "passed": passed,
        "outputs": outputs,
    });
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(r.out.join(MANIFEST), text)?;
    outputs.push(MANIFEST.to_string());
    Ok(RunOutcome { outputs, passed })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, value, tolerance, passed: value < tolerance }
    }
}

fn verify(model: &PhaseModel, p: &Params, seed: u64, sink: &mut Sink) -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut det_full: f64 = 0.0;
    let mut det_reduced: f64 = 0.0;
    for _ in 0..p.samples {
        let k = rng.random_range(-1000..=1000);
        let lambda = rng.random::<f64>() * TAU;
        det_full = det_full.max((transfer_general(k, lambda, model)?.det().norm() - 1.0).abs());
        det_reduced = det_reduced.max((transfer_reduced_at(k, lambda, model)?.det().norm() - 1.0).abs());
    }
    let mut stencil: f64 = 0.0;
    for _ in 0..p.samples.clamp(1, 20) {
        let lambda = rng.random::<f64>() * TAU;
        let c0 = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let c1 = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let track = propagate(c0, c1, lambda, model, -100..=100, PropagateOptions::default())?;
        stencil = stencil.max(residual(&track, model)?);
    }
    let window = assemble(model, -(p.sites as i64) / 2, p.sites.max(4), EdgeCompletion::Identity, EdgeCompletion::Identity);
    let algebra = verify_algebra(p.samples, seed);
    let checks = [
        Check::new("transfer_determinant_full", det_full, 1e-12),
        Check::new("transfer_determinant_reduced", det_reduced, 1e-12),
        Check::new("transfer_stencil_residual", stencil, 1e-10),
        Check::new("window_unitarity", window.unitarity_defect(), 1e-12),
        Check::new("realification", algebra.max_deviation(), 1e-12),
    ];
    let passed = checks.iter().all(|c| c.passed);
    sink.json("verify.json", &json!({ "passed": passed, "checks": checks, "algebra": algebra }))?;
    Ok(passed)
}

fn bands(model: &PhaseModel, p: &Params, sink: &mut Sink) -> Result<bool, CliError> {
    let nu = nu_phases(model)?;
    let coupling = model.constant_coupling().ok_or(pentaband::Error::VaryingCoupling)?;
    let grid = x_grid(p.x_points.max(4 * nu.period()));
    let bf = band_functions(&nu, &coupling, &grid)?;
    let arcs = band_arcs(&bf, model.slope());
    sink.csv(BAND_FUNCTIONS, |w| bf.write_csv(w))?;
    sink.write("arcs.json", arcs.to_json() + "\n")?;
    let mut summary = json!({
        "period": nu.period(),
        "x_points": grid.len(),
        "max_jump": bf.max_jump(),
        "ambiguous_steps": bf.ambiguous.len(),
        "total_length": arcs.total_length(),
    });
    if matches!(model.variant, Variant::TwoValued { .. }) {
        let (theta_sum, delta) = two_valued_parameters(model)?;
        let closed = two_periodic_closed_form(delta, theta_sum, model.slope(), &coupling)?;
        sink.write("arcs_closed_form.json", closed.to_json() + "\n")?;
        summary["closed_form_endpoint_distance"] = json!(arcs.endpoint_distance(&closed));
    }
    sink.json("bands_summary.json", &summary)?;
    Ok(true)
}

fn halfline(model: &PhaseModel, p: &Params, sink: &mut Sink) -> Result<bool, CliError> {
    let k0 = p.k0.unwrap_or_else(|| minimal_k0(model));
    let hl = HalfLine::new(model, k0)?;
    let opts = FindOptions { resolution: p.resolution, tol: p.tol, ..FindOptions::default() };
    let report = find_eigenvalues_with(&hl, opts)?;
    sink.write("eigen_report.json", report.to_json() + "\n")?;
    let profile = discriminant_profile(&hl, &uniform_grid(p.grid.max(8)))?;
    sink.csv("profile.csv", |w| profile.write_csv(w, &hl))?;
    Ok(true)
}

fn localize(model: &PhaseModel, p: &Params, seed: Option<u64>, sink: &mut Sink) -> Result<bool, CliError> {
    let cloud = truncated_spectrum(model, p.sites, true)?;
    let profile = localization_profile(&cloud)?;
    sink.csv("localization.csv", |w| profile.write_csv(w))?;
    let median = profile.median_vector();
    if let Some(j) = median {
        let v = SiteVector { first_site: cloud.first_site, values: cloud.vector(j)? };
        sink.csv(MEDIAN_VECTOR, |w| v.write_csv(w))?;
    }
    let median_angle = median.map(|j| profile.vectors[j].angle);
    // local Lyapunov exponent at the median vector's angle, when a seed is given
    let gamma = match (seed, median_angle) {
        (Some(s), Some(angle)) => Some(estimate_gamma(angle, model, p.steps, s)?),
        _ => None,
    };
    let summary = json!({
        "sites": profile.sites,
        "bulk_vectors": profile.vectors.iter().filter(|v| v.bulk).count(),
        "positive_fraction": profile.positive_fraction(),
        "median_bulk_rate": profile.median_bulk_rate(),
        "median_participation": profile.median_participation(),
        "median_angle": median_angle,
        "gamma_at_median_angle": gamma,
    });
    sink.json("localization_summary.json", &summary)?;
    Ok(true)
}

fn gordon(model: &PhaseModel, p: &Params, sink: &mut Sink) -> Result<bool, CliError> {
    let (beta, theta0, alpha0) = match model.variant {
        Variant::AlmostPeriodic { beta, theta0, alpha0 } => (beta, theta0, alpha0),
        ref other => return Err(pentaband::Error::WrongVariant { expected: "almost_periodic", found: other.name() }.into()),
    };
    let coupling = model.constant_coupling().ok_or(pentaband::Error::VaryingCoupling)?;
    let frac = beta.rem_euclid(1.0);
    let lambdas = uniform_grid(p.grid);
    let mut text = String::from("p,q,transfer_period,lambda,ratio\n");
    // period-one approximants are not representable as periodic lists
    for (num, q) in convergents(frac, p.max_q).into_iter().filter(|&(_, q)| q >= 2) {
        let theta: Vec<f64> = (0..q).map(|k| TAU * (num as f64 / q as f64) * k as f64 + theta0).collect();
        let approx = PhaseModel::periodic(theta, vec![alpha0; q as usize], 0.0, coupling.t()).map_err(pentaband::Error::from)?;
        let period = approx.transfer_period().unwrap_or(q as usize);
        let reach = 2 * period as i64;
        for &lambda in &lambdas {
            let track = propagate(C64::new(1.0, 0.0), C64::new(0.0, 0.0), lambda, &approx, -reach..=reach, PropagateOptions::default())?;
            let ratio = gordon_ratio(&track, period)?;
            text.push_str(&format!("{num},{q},{period},{lambda},{ratio}\n"));
        }
    }
    sink.write("gordon.csv", text)?;
    Ok(true)
}

/// Flatten the reports found in `dir` into plot tables.
pub fn plotdata(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match emit_plotdata(dir) {
        Err(pentaband::Error::MissingReport(m)) => Err(CliError::Config(format!("no report in {}: {m}", dir.display()))),
        other => Ok(other?),
    }
}
