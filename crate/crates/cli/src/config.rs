//! Configuration: JSON schema, unit resolution, `--set` overrides,
//! validation, hashing, and the run manifest.
//!
//! Raw configs carry explicit units. Frequency-valued keys additionally
//! carry a `convention` flag — `"angular"` (the value already includes the
//! 2π) or `"ordinary"` (cycles per second; multiplied by 2π on load) —
//! because a silent factor of 2π is the classic way to ruin a microwave
//! simulation. The resolved form is pure SI with every rate in rad/s, and
//! its SHA-256 hash identifies the run in the manifest.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use qbsim::constants::PHI0;
use qbsim::dispersive::{
    dispersive_map, validity_check, CircuitParams, DEFAULT_VALIDITY_THRESHOLD,
};
use qbsim::dynamics::ChargingDrive;
use qbsim::readout::ReadoutParams;
use qbsim::squid::{BoundaryCondition, PotentialConvention, SquidParams, MIN_GRID};

use crate::CliError;

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// Resolved configuration (SI units, rad/s everywhere)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Charge,
    Age,
    Ergotropy,
    RatioSweep,
    Readout,
    SquidLevels,
    FluxSweep,
    /// Expands to all five bundled figure datasets rebuilt from this
    /// config, each with its own table and manifest.
    Reproduce,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::Charge => "charge",
            Self::Age => "age",
            Self::Ergotropy => "ergotropy",
            Self::RatioSweep => "ratio-sweep",
            Self::Readout => "readout",
            Self::SquidLevels => "squid-levels",
            Self::FluxSweep => "flux-sweep",
            Self::Reproduce => "reproduce",
        }
    }

    fn parse(text: &str) -> Result<Self, CliError> {
        const ALL: [Scenario; 8] = [
            Scenario::Charge,
            Scenario::Age,
            Scenario::Ergotropy,
            Scenario::RatioSweep,
            Scenario::Readout,
            Scenario::SquidLevels,
            Scenario::FluxSweep,
            Scenario::Reproduce,
        ];
        ALL.into_iter().find(|s| s.name() == text).ok_or_else(|| {
            let names: Vec<&str> = ALL.iter().map(|s| s.name()).collect();
            err(format!(
                "unknown scenario \"{text}\" (expected one of {})",
                names.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Lindblad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn to_core(self) -> BoundaryCondition {
        match self {
            Self::Periodic => BoundaryCondition::Periodic,
            Self::Dirichlet => BoundaryCondition::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Potential {
    BiasOnly,
    IncludeZeroPoint,
}

impl Potential {
    pub fn to_core(self) -> PotentialConvention {
        match self {
            Self::BiasOnly => PotentialConvention::BiasOnly,
            Self::IncludeZeroPoint => PotentialConvention::IncludeZeroPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedOutput {
    pub path: String,
    pub format: OutputFormat,
}

/// All physical inputs, resolved to SI. Frequencies and rates are angular
/// (rad/s); fluxes are in units of the flux quantum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_q: f64,
    pub lambda_ab: f64,
    pub gamma: f64,
    pub beta_mag: f64,
    pub theta_b: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub line_rate: f64,
    pub t_end: f64,
    pub tau_end: f64,
    pub i_c: f64,
    pub c_total: f64,
    pub phi_d: f64,
    pub phi_a_tilde: f64,
    pub phi_b_tilde: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl Physics {
    pub fn defaults() -> Self {
        Self {
            omega_a: TAU * 5e9,
            omega_b: TAU * 4e9,
            omega_q: TAU * 4.5e9,
            lambda_ab: 1e5,
            gamma: 1e4,
            beta_mag: 0.4,
            theta_b: 0.0,
            g_a: 1e7,
            g_b: PI * 1e7,
            line_rate: 1e5,
            t_end: 1.5e-3,
            tau_end: 1.5e-3,
            i_c: 0.9794e-6,
            c_total: 3.663e-12,
            phi_d: 1.977,
            phi_a_tilde: 0.01,
            phi_b_tilde: 0.01,
            phi_min: 1.95,
            phi_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub engine: Engine,
    /// Fock truncation; `None` sizes the space from the target amplitude.
    pub dim: Option<usize>,
    /// Integrator step in seconds; `None` picks a stable step automatically.
    pub dt: Option<f64>,
    pub grid_size: usize,
    pub n_states: usize,
    pub boundary: Boundary,
    pub potential_convention: Potential,
    pub snapshot_stride: usize,
    pub time_points: usize,
    pub beta_points: usize,
    pub flux_points: usize,
    pub detuning_points: usize,
    pub validity_threshold: f64,
}

impl Numerics {
    pub fn defaults() -> Self {
        Self {
            engine: Engine::Analytic,
            dim: None,
            dt: None,
            grid_size: 4096,
            n_states: 4,
            boundary: Boundary::Periodic,
            potential_convention: Potential::BiasOnly,
            snapshot_stride: 100,
            time_points: 301,
            beta_points: 146,
            flux_points: 101,
            detuning_points: 2801,
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub scenario: Option<Scenario>,
    pub output: ResolvedOutput,
    pub physics: Physics,
    pub numerics: Numerics,
}

// ---------------------------------------------------------------------------
// Raw configuration (explicit units)
// ---------------------------------------------------------------------------

/// A dimensioned value as it appears in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Quantity {
    value: f64,
    unit: String,
    #[serde(default)]
    convention: Option<String>,
}

/// Dimensionless entries may be bare numbers or wrapped quantities.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Bare(f64),
    Wrapped(Quantity),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    scenario: Option<String>,
    output: Option<RawOutput>,
    physics: RawPhysics,
    numerics: RawNumerics,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    path: Option<String>,
    format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPhysics {
    omega_a: Option<Quantity>,
    omega_b: Option<Quantity>,
    omega_q: Option<Quantity>,
    lambda_ab: Option<Quantity>,
    gamma: Option<Quantity>,
    beta_mag: Option<Scalar>,
    theta_b: Option<Scalar>,
    g_a: Option<Quantity>,
    g_b: Option<Quantity>,
    line_rate: Option<Quantity>,
    t_end: Option<Quantity>,
    tau_end: Option<Quantity>,
    i_c: Option<Quantity>,
    c_total: Option<Quantity>,
    phi_d: Option<Quantity>,
    phi_a_tilde: Option<Quantity>,
    phi_b_tilde: Option<Quantity>,
    phi_min: Option<Quantity>,
    phi_max: Option<Quantity>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawNumerics {
    engine: Option<String>,
    dim: Option<Value>,
    dt: Option<Value>,
    grid_size: Option<usize>,
    n_states: Option<usize>,
    boundary: Option<String>,
    potential_convention: Option<String>,
    snapshot_stride: Option<usize>,
    time_points: Option<usize>,
    beta_points: Option<usize>,
    flux_points: Option<usize>,
    detuning_points: Option<usize>,
    validity_threshold: Option<f64>,
}

// ---------------------------------------------------------------------------
// Unit resolution
// ---------------------------------------------------------------------------

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(format!("{key}: value is not finite")))
    }
}

fn reject_convention(key: &str, q: &Quantity) -> Result<(), CliError> {
    if q.convention.is_some() {
        return Err(err(format!(
            "{key}: \"convention\" applies only to frequency-valued keys"
        )));
    }
    Ok(())
}

/// Frequencies demand both a unit and an explicit angular/ordinary flag.
fn resolve_frequency(key: &str, q: &Quantity) -> Result<f64, CliError> {
    let scale = match q.unit.as_str() {
        "GHz" => 1e9,
        "MHz" => 1e6,
        "kHz" => 1e3,
        "Hz" => 1.0,
        "rad/s" => 1.0,
        other => {
            return Err(err(format!(
                "{key}: unknown frequency unit \"{other}\" (expected GHz, MHz, kHz, Hz, or rad/s)"
            )));
        }
    };
    let Some(convention) = q.convention.as_deref() else {
        return Err(err(format!(
            "{key} is frequency-valued and must state its convention: \
             \"angular\" (the value already includes the 2π) or \
             \"ordinary\" (cycles per second, multiplied by 2π on load)"
        )));
    };
    let factor = match convention {
        "angular" => 1.0,
        "ordinary" => {
            if q.unit == "rad/s" {
                return Err(err(format!(
                    "{key}: rad/s is an angular unit; \"ordinary\" does not apply to it"
                )));
            }
            TAU
        }
        other => {
            return Err(err(format!(
                "{key}: convention must be \"angular\" or \"ordinary\", got \"{other}\""
            )));
        }
    };
    finite(key, q.value * scale * factor)
}

fn resolve_with_table(
    key: &str,
    q: &Quantity,
    kind: &str,
    table: &[(&str, f64)],
) -> Result<f64, CliError> {
    reject_convention(key, q)?;
    for (unit, scale) in table {
        if q.unit == *unit {
            return finite(key, q.value * scale);
        }
    }
    let names: Vec<&str> = table.iter().map(|(u, _)| *u).collect();
    Err(err(format!(
        "{key}: unknown {kind} unit \"{}\" (expected one of {})",
        q.unit,
        names.join(", ")
    )))
}

fn resolve_time(key: &str, q: &Quantity) -> Result<f64, CliError> {
    resolve_with_table(
        key,
        q,
        "time",
        &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)],
    )
}

fn resolve_current(key: &str, q: &Quantity) -> Result<f64, CliError> {
    resolve_with_table(key, q, "current", &[("A", 1.0), ("mA", 1e-3), ("uA", 1e-6)])
}

fn resolve_capacitance(key: &str, q: &Quantity) -> Result<f64, CliError> {
    resolve_with_table(
        key,
        q,
        "capacitance",
        &[("F", 1.0), ("pF", 1e-12), ("fF", 1e-15)],
    )
}

/// Fluxes resolve to units of the flux quantum.
fn resolve_flux(key: &str, q: &Quantity) -> Result<f64, CliError> {
    reject_convention(key, q)?;
    match q.unit.as_str() {
        "Phi0" => finite(key, q.value),
        "Wb" => finite(key, q.value / PHI0),
        other => Err(err(format!(
            "{key}: unknown flux unit \"{other}\" (expected Phi0 or Wb)"
        ))),
    }
}

fn resolve_dimensionless(key: &str, s: &Scalar) -> Result<f64, CliError> {
    match s {
        Scalar::Bare(v) => finite(key, *v),
        Scalar::Wrapped(q) => {
            resolve_with_table(key, q, "dimensionless", &[("dimensionless", 1.0)])
        }
    }
}

fn resolve_angle(key: &str, s: &Scalar) -> Result<f64, CliError> {
    match s {
        Scalar::Bare(v) => finite(key, *v),
        Scalar::Wrapped(q) => {
            resolve_with_table(key, q, "angle", &[("rad", 1.0), ("deg", PI / 180.0)])
        }
    }
}

fn resolve_dim(v: &Value) -> Result<Option<usize>, CliError> {
    match v {
        Value::String(s) if s == "auto" => Ok(None),
        Value::Number(num) => {
            let d = num
                .as_u64()
                .ok_or_else(|| err("numerics.dim: expected a positive integer or \"auto\""))?;
            if d < 2 {
                return Err(err("numerics.dim: a battery needs at least 2 levels"));
            }
            Ok(Some(d as usize))
        }
        _ => Err(err("numerics.dim: expected a positive integer or \"auto\"")),
    }
}

fn resolve_dt(v: &Value) -> Result<Option<f64>, CliError> {
    match v {
        Value::String(s) if s == "auto" => Ok(None),
        Value::Object(_) => {
            let q: Quantity =
                serde_json::from_value(v.clone()).map_err(|e| err(format!("numerics.dt: {e}")))?;
            let dt = resolve_time("numerics.dt", &q)?;
            if dt <= 0.0 {
                return Err(err("numerics.dt: must be positive"));
            }
            Ok(Some(dt))
        }
        _ => Err(err(
            "numerics.dt: expected {\"value\": …, \"unit\": \"s\"} or \"auto\"",
        )),
    }
}

// ---------------------------------------------------------------------------
// Raw → resolved
// ---------------------------------------------------------------------------

fn resolve(
    raw: RawConfig,
    forced: Option<Scenario>,
    require_scenario: bool,
) -> Result<ResolvedConfig, CliError> {
    // An explicit subcommand overrides whatever the file names.
    let scenario = match (forced, raw.scenario.as_deref()) {
        (Some(s), _) => Some(s),
        (None, Some(text)) => Some(Scenario::parse(text)?),
        (None, None) if require_scenario => {
            return Err(err(
                "config names no \"scenario\"; add one or use a scenario subcommand",
            ));
        }
        (None, None) => None,
    };

    let mut p = Physics::defaults();
    let rp = &raw.physics;
    if let Some(q) = &rp.omega_a {
        p.omega_a = resolve_frequency("physics.omega_a", q)?;
    }
    if let Some(q) = &rp.omega_b {
        p.omega_b = resolve_frequency("physics.omega_b", q)?;
    }
    if let Some(q) = &rp.omega_q {
        p.omega_q = resolve_frequency("physics.omega_q", q)?;
    }
    if let Some(q) = &rp.lambda_ab {
        p.lambda_ab = resolve_frequency("physics.lambda_ab", q)?;
    }
    if let Some(q) = &rp.gamma {
        p.gamma = resolve_frequency("physics.gamma", q)?;
    }
    if let Some(s) = &rp.beta_mag {
        p.beta_mag = resolve_dimensionless("physics.beta_mag", s)?;
    }
    if let Some(s) = &rp.theta_b {
        p.theta_b = resolve_angle("physics.theta_b", s)?;
    }
    if let Some(q) = &rp.g_a {
        p.g_a = resolve_frequency("physics.g_a", q)?;
    }
    if let Some(q) = &rp.g_b {
        p.g_b = resolve_frequency("physics.g_b", q)?;
    }
    if let Some(q) = &rp.line_rate {
        p.line_rate = resolve_frequency("physics.line_rate", q)?;
    }
    if let Some(q) = &rp.t_end {
        p.t_end = resolve_time("physics.t_end", q)?;
    }
    if let Some(q) = &rp.tau_end {
        p.tau_end = resolve_time("physics.tau_end", q)?;
    }
    if let Some(q) = &rp.i_c {
        p.i_c = resolve_current("physics.i_c", q)?;
    }
    if let Some(q) = &rp.c_total {
        p.c_total = resolve_capacitance("physics.c_total", q)?;
    }
    if let Some(q) = &rp.phi_d {
        p.phi_d = resolve_flux("physics.phi_d", q)?;
    }
    if let Some(q) = &rp.phi_a_tilde {
        p.phi_a_tilde = resolve_flux("physics.phi_a_tilde", q)?;
    }
    if let Some(q) = &rp.phi_b_tilde {
        p.phi_b_tilde = resolve_flux("physics.phi_b_tilde", q)?;
    }
    if let Some(q) = &rp.phi_min {
        p.phi_min = resolve_flux("physics.phi_min", q)?;
    }
    if let Some(q) = &rp.phi_max {
        p.phi_max = resolve_flux("physics.phi_max", q)?;
    }

    let mut n = Numerics::defaults();
    let rn = &raw.numerics;
    if let Some(text) = &rn.engine {
        n.engine = match text.as_str() {
            "analytic" => Engine::Analytic,
            "lindblad" => Engine::Lindblad,
            other => {
                return Err(err(format!(
                    "numerics.engine: expected \"analytic\" or \"lindblad\", got \"{other}\""
                )));
            }
        };
    }
    if let Some(v) = &rn.dim {
        n.dim = resolve_dim(v)?;
    }
    if let Some(v) = &rn.dt {
        n.dt = resolve_dt(v)?;
    }
    if let Some(g) = rn.grid_size {
        n.grid_size = g;
    }
    if let Some(k) = rn.n_states {
        n.n_states = k;
    }
    if let Some(text) = &rn.boundary {
        n.boundary = match text.as_str() {
            "periodic" => Boundary::Periodic,
            "dirichlet" => Boundary::Dirichlet,
            other => {
                return Err(err(format!(
                    "numerics.boundary: expected \"periodic\" or \"dirichlet\", got \"{other}\""
                )));
            }
        };
    }
    if let Some(text) = &rn.potential_convention {
        n.potential_convention = match text.as_str() {
            "bias-only" => Potential::BiasOnly,
            "include-zero-point" => Potential::IncludeZeroPoint,
            other => {
                return Err(err(format!(
                    "numerics.potential_convention: expected \"bias-only\" or \
                     \"include-zero-point\", got \"{other}\""
                )));
            }
        };
    }
    if let Some(s) = rn.snapshot_stride {
        n.snapshot_stride = s;
    }
    if let Some(t) = rn.time_points {
        n.time_points = t;
    }
    if let Some(b) = rn.beta_points {
        n.beta_points = b;
    }
    if let Some(f) = rn.flux_points {
        n.flux_points = f;
    }
    if let Some(d) = rn.detuning_points {
        n.detuning_points = d;
    }
    if let Some(v) = rn.validity_threshold {
        n.validity_threshold = finite("numerics.validity_threshold", v)?;
    }

    let raw_output = raw.output.unwrap_or_default();
    let format = match raw_output.format.as_deref() {
        None => OutputFormat::Csv,
        Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(err(format!(
                "output.format: expected \"csv\" or \"json\", got \"{other}\""
            )));
        }
    };
    let path = raw_output.path.unwrap_or_else(|| {
        let stem = scenario.map(Scenario::name).unwrap_or("run");
        let ext = match format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        format!("{stem}.{ext}")
    });

    Ok(ResolvedConfig {
        scenario,
        output: ResolvedOutput { path, format },
        physics: p,
        numerics: n,
    })
}

// ---------------------------------------------------------------------------
// Loading: file + overrides, raw config or manifest
// ---------------------------------------------------------------------------

pub const MANIFEST_MARKER: &str = "qbsim_manifest";
pub const MANIFEST_VERSION: u64 = 1;

/// Written next to every data table; feeding it back to `qbsim run`
/// reproduces the table byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(rename = "qbsim_manifest")]
    pub version: u64,
    pub library_version: String,
    pub config_hash: String,
    pub resolved: ResolvedConfig,
}

/// Parse one `--set path.to.key=json` override into the raw tree. Values
/// that fail to parse as JSON are taken as bare strings, so
/// `--set numerics.engine=lindblad` works without inner quotes.
fn apply_overrides(tree: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for entry in overrides {
        let Some((path, raw_value)) = entry.split_once('=') else {
            return Err(err(format!("--set expects PATH=VALUE, got \"{entry}\"")));
        };
        let value: Value = serde_json::from_str(raw_value)
            .unwrap_or_else(|_| Value::String(raw_value.to_string()));
        let segments: Vec<&str> = path.split('.').collect();
        if segments.iter().any(|s| s.is_empty()) {
            return Err(err(format!("--set: empty segment in path \"{path}\"")));
        }
        let (last, parents) = segments.split_last().expect("split checked non-empty");
        let mut node = &mut *tree;
        for segment in parents {
            let obj = node.as_object_mut().ok_or_else(|| {
                err(format!(
                    "--set {path}: \"{segment}\" is not an object in the config"
                ))
            })?;
            node = obj
                .entry(segment.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| err(format!("--set {path}: parent is not an object")))?;
        obj.insert(last.to_string(), value);
    }
    Ok(())
}

pub fn load(
    path: Option<&Path>,
    overrides: &[String],
    forced: Option<Scenario>,
    require_scenario: bool,
) -> Result<ResolvedConfig, CliError> {
    let mut tree: Value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| err(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| err(format!("{}: invalid JSON: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    apply_overrides(&mut tree, overrides)?;

    if tree.get(MANIFEST_MARKER).is_some() {
        let manifest: Manifest = from_tree("manifest", tree)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(err(format!(
                "manifest: unsupported version {} (this build reads version {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        let resolved = manifest.resolved;
        if let Some(forced) = forced {
            if resolved.scenario != Some(forced) {
                return Err(err(format!(
                    "manifest records scenario \"{}\", not \"{}\"; rerun it with `qbsim run`",
                    resolved.scenario.map(Scenario::name).unwrap_or("none"),
                    forced.name()
                )));
            }
        }
        if require_scenario && resolved.scenario.is_none() {
            return Err(err("manifest names no scenario"));
        }
        Ok(resolved)
    } else {
        let raw: RawConfig = from_tree("config", tree)?;
        resolve(raw, forced, require_scenario)
    }
}

/// Deserialize with the failing key's dotted path in the message, so
/// "missing field `unit`" arrives as "config: physics.gamma: missing
/// field `unit`" instead of an anonymous complaint.
fn from_tree<T: serde::de::DeserializeOwned>(label: &str, tree: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            err(format!("{label}: {inner}"))
        } else {
            err(format!("{label}: {path}: {inner}"))
        }
    })
}

// ---------------------------------------------------------------------------
// Hashing and manifests
// ---------------------------------------------------------------------------

pub fn config_hash(resolved: &ResolvedConfig) -> String {
    let bytes = serde_json::to_vec(resolved).expect("resolved config serializes");
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(2 * digest.len());
    for byte in digest {
        write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
    }
    hex
}

pub fn manifest_for(resolved: &ResolvedConfig) -> Manifest {
    Manifest {
        version: MANIFEST_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(resolved),
        resolved: resolved.clone(),
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    output.with_file_name(format!("{stem}.manifest.json"))
}

pub const FIGURE_NAMES: [&str; 5] = ["fig2a", "fig2b", "fig3", "fig5a", "fig5b"];

/// One figure dataset derived from a base configuration: same physics and
/// numerics, with the scenario and output path swapped for the figure's.
pub fn figure_child(
    base: &ResolvedConfig,
    name: &str,
    out_dir: &Path,
) -> Result<ResolvedConfig, CliError> {
    let scenario = match name {
        "fig2a" => Scenario::Charge,
        "fig2b" => Scenario::RatioSweep,
        "fig3" => Scenario::Readout,
        "fig5a" => Scenario::SquidLevels,
        "fig5b" => Scenario::FluxSweep,
        other => return Err(err(format!("unknown figure \"{other}\""))),
    };
    let ext = match base.output.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let file = format!("{name}.{ext}");
    let path = if out_dir == Path::new(".") {
        PathBuf::from(file)
    } else {
        out_dir.join(file)
    };
    Ok(ResolvedConfig {
        scenario: Some(scenario),
        output: ResolvedOutput {
            path: path.to_string_lossy().into_owned(),
            format: base.output.format,
        },
        physics: base.physics.clone(),
        numerics: base.numerics.clone(),
    })
}

/// Pinned settings for the bundled figure datasets: library defaults with
/// only the scenario and output path filled in.
pub fn figure_preset(name: &str, out_dir: &Path) -> Result<ResolvedConfig, CliError> {
    let base = ResolvedConfig {
        scenario: None,
        output: ResolvedOutput {
            path: "run.csv".to_string(),
            format: OutputFormat::Csv,
        },
        physics: Physics::defaults(),
        numerics: Numerics::defaults(),
    };
    figure_child(&base, name, out_dir)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

fn note(errors: &mut Vec<String>, warnings: &mut Vec<String>, is_error: bool, msg: String) {
    if is_error {
        errors.push(msg);
    } else {
        warnings.push(msg);
    }
}

/// Check every model object the configuration can build. Problems in
/// objects the selected scenario actually uses are errors; problems
/// elsewhere are demoted to warnings so, say, a zero critical current
/// cannot block a charging run. With no scenario selected — or with the
/// reproduce scenario, whose figures touch every subsystem — everything
/// is strict.
pub fn validate(r: &ResolvedConfig) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let p = &r.physics;
    let n = &r.numerics;

    let any = r.scenario.is_none() || r.scenario == Some(Scenario::Reproduce);
    let uses_drive = any
        || matches!(
            r.scenario,
            Some(Scenario::Charge | Scenario::Age | Scenario::Ergotropy | Scenario::RatioSweep)
        );
    // The dispersive reduction underlies both the charging model and the
    // probe shift, so its preconditions matter to nearly every scenario.
    let uses_circuit = uses_drive || matches!(r.scenario, Some(Scenario::Readout));
    let uses_readout = any || matches!(r.scenario, Some(Scenario::Readout));
    let uses_squid = any
        || matches!(
            r.scenario,
            Some(Scenario::SquidLevels | Scenario::FluxSweep)
        );

    match CircuitParams::new(p.omega_a, p.omega_q, p.omega_b, p.g_a, p.g_b, p.gamma)
        .and_then(|c| dispersive_map(&c))
    {
        Ok(d) => {
            let v = validity_check(&d, n.validity_threshold);
            if !v.a_ok {
                warnings.push(format!(
                    "dispersive validity: g_a/|delta_a| = {:.4} is not below {}",
                    v.ratio_a, v.threshold
                ));
            }
            if !v.b_ok {
                warnings.push(format!(
                    "dispersive validity: g_b/|delta_b| = {:.4} is not below {}",
                    v.ratio_b, v.threshold
                ));
            }
        }
        Err(e) => note(
            &mut errors,
            &mut warnings,
            uses_circuit,
            format!("circuit parameters: {e}"),
        ),
    }

    if let Err(e) = ChargingDrive::new(p.lambda_ab, p.beta_mag, p.theta_b) {
        note(
            &mut errors,
            &mut warnings,
            uses_drive,
            format!("charging drive: {e}"),
        );
    }

    if let Err(e) = ReadoutParams::new(p.omega_q, p.omega_a, p.g_a, p.line_rate) {
        note(
            &mut errors,
            &mut warnings,
            uses_readout,
            format!("readout: {e}"),
        );
    }

    match SquidParams::new(
        p.i_c,
        p.c_total,
        p.phi_d,
        p.phi_a_tilde,
        p.phi_b_tilde,
        n.potential_convention.to_core(),
    ) {
        Ok(sp) => {
            for w in sp.warnings() {
                warnings.push(format!("junction: {w}"));
            }
        }
        Err(e) => note(
            &mut errors,
            &mut warnings,
            uses_squid,
            format!("junction: {e}"),
        ),
    }

    let needs_t_end = any || matches!(r.scenario, Some(Scenario::Charge | Scenario::Ergotropy));
    if !(p.t_end.is_finite() && p.t_end > 0.0) {
        note(
            &mut errors,
            &mut warnings,
            needs_t_end,
            format!("physics.t_end must be positive and finite, got {}", p.t_end),
        );
    }
    let needs_tau_end = any || matches!(r.scenario, Some(Scenario::Age));
    if !(p.tau_end.is_finite() && p.tau_end > 0.0) {
        note(
            &mut errors,
            &mut warnings,
            needs_tau_end,
            format!(
                "physics.tau_end must be positive and finite, got {}",
                p.tau_end
            ),
        );
    }
    if p.phi_min >= p.phi_max {
        note(
            &mut errors,
            &mut warnings,
            any || matches!(r.scenario, Some(Scenario::FluxSweep)),
            format!(
                "physics.phi_min must be below physics.phi_max, got [{}, {}]",
                p.phi_min, p.phi_max
            ),
        );
    }

    if n.time_points < 2 {
        note(
            &mut errors,
            &mut warnings,
            any || matches!(r.scenario, Some(Scenario::Charge | Scenario::Age)),
            "numerics.time_points: a sweep needs at least 2 points".to_string(),
        );
    }
    if n.beta_points < 2 {
        note(
            &mut errors,
            &mut warnings,
            any || matches!(r.scenario, Some(Scenario::RatioSweep)),
            "numerics.beta_points: a sweep needs at least 2 points".to_string(),
        );
    }
    if n.detuning_points < 2 {
        note(
            &mut errors,
            &mut warnings,
            any || matches!(r.scenario, Some(Scenario::Readout)),
            "numerics.detuning_points: a sweep needs at least 2 points".to_string(),
        );
    }
    if n.flux_points < 2 {
        note(
            &mut errors,
            &mut warnings,
            any || matches!(r.scenario, Some(Scenario::FluxSweep)),
            "numerics.flux_points: a sweep needs at least 2 points".to_string(),
        );
    }
    if n.snapshot_stride == 0 {
        errors.push("numerics.snapshot_stride must be at least 1".to_string());
    }
    if n.n_states == 0 {
        note(
            &mut errors,
            &mut warnings,
            uses_squid,
            "numerics.n_states must be at least 1".to_string(),
        );
    }
    if n.grid_size < MIN_GRID {
        note(
            &mut errors,
            &mut warnings,
            uses_squid,
            format!(
                "numerics.grid_size: at least {MIN_GRID} points, got {}",
                n.grid_size
            ),
        );
    } else if n.boundary == Boundary::Periodic && !n.grid_size.is_multiple_of(2) {
        note(
            &mut errors,
            &mut warnings,
            uses_squid,
            "numerics.grid_size must be even for the periodic boundary".to_string(),
        );
    }
    if !(n.validity_threshold.is_finite() && n.validity_threshold > 0.0) {
        errors.push(format!(
            "numerics.validity_threshold must be positive and finite, got {}",
            n.validity_threshold
        ));
    }

    ValidationReport { errors, warnings }
}

pub fn render_validation(resolved: &ResolvedConfig, report: &ValidationReport) -> String {
    let doc = serde_json::json!({
        "ok": report.errors.is_empty(),
        "scenario": resolved.scenario,
        "library_version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(resolved),
        "errors": report.errors,
        "warnings": report.warnings,
        "resolved": resolved,
    });
    serde_json::to_string_pretty(&doc).expect("validation report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantity(value: f64, unit: &str, convention: Option<&str>) -> Quantity {
        Quantity {
            value,
            unit: unit.to_string(),
            convention: convention.map(str::to_string),
        }
    }

    #[test]
    fn ordinary_frequencies_gain_a_factor_of_two_pi() {
        let q = quantity(5.0, "GHz", Some("ordinary"));
        let got = resolve_frequency("physics.omega_a", &q).unwrap();
        assert_eq!(got, TAU * 5e9);

        let q = quantity(1e5, "rad/s", Some("angular"));
        assert_eq!(resolve_frequency("physics.gamma", &q).unwrap(), 1e5);
    }

    #[test]
    fn frequencies_without_a_convention_are_rejected_by_name() {
        let q = quantity(5.0, "GHz", None);
        let msg = match resolve_frequency("physics.omega_a", &q) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert!(msg.contains("physics.omega_a"), "message: {msg}");
        assert!(msg.contains("angular"), "message: {msg}");
        assert!(msg.contains("ordinary"), "message: {msg}");

        let q = quantity(1.0, "rad/s", Some("ordinary"));
        assert!(resolve_frequency("physics.gamma", &q).is_err());
    }

    #[test]
    fn time_keys_refuse_a_convention_flag() {
        let q = quantity(1.5, "ms", Some("angular"));
        assert!(resolve_time("physics.t_end", &q).is_err());
        let q = quantity(1.5, "ms", None);
        assert_eq!(resolve_time("physics.t_end", &q).unwrap(), 1.5e-3);
    }

    #[test]
    fn flux_accepts_quanta_or_webers() {
        let q = quantity(1.977, "Phi0", None);
        assert_eq!(resolve_flux("physics.phi_d", &q).unwrap(), 1.977);
        let q = quantity(2.0 * PHI0, "Wb", None);
        let got = resolve_flux("physics.phi_d", &q).unwrap();
        assert!((got - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_fatal_and_named() {
        let tree: Value = serde_json::from_str(r#"{"physics": {"gamm": 1.0}}"#).unwrap();
        let got = serde_json::from_value::<RawConfig>(tree);
        let msg = got.unwrap_err().to_string();
        assert!(msg.contains("gamm"), "message: {msg}");
    }

    #[test]
    fn overrides_create_nested_objects_and_parse_json_values() {
        let mut tree = Value::Object(Map::new());
        apply_overrides(
            &mut tree,
            &[
                "physics.beta_mag=0.6".to_string(),
                "numerics.engine=lindblad".to_string(),
                r#"physics.gamma={"value":10,"unit":"kHz","convention":"angular"}"#.to_string(),
            ],
        )
        .unwrap();
        assert_eq!(tree["physics"]["beta_mag"], Value::from(0.6));
        assert_eq!(tree["numerics"]["engine"], Value::from("lindblad"));
        assert_eq!(tree["physics"]["gamma"]["unit"], Value::from("kHz"));

        let raw: RawConfig = serde_json::from_value(tree).unwrap();
        let resolved = resolve(raw, Some(Scenario::Charge), false).unwrap();
        assert_eq!(resolved.physics.beta_mag, 0.6);
        assert_eq!(resolved.physics.gamma, 1e4);
        assert_eq!(resolved.numerics.engine, Engine::Lindblad);
    }

    #[test]
    fn dim_and_dt_accept_auto_or_explicit_values() {
        assert_eq!(resolve_dim(&Value::from("auto")).unwrap(), None);
        assert_eq!(resolve_dim(&Value::from(128)).unwrap(), Some(128));
        assert!(resolve_dim(&Value::from(1)).is_err());
        assert!(resolve_dim(&Value::from(-4)).is_err());

        assert_eq!(resolve_dt(&Value::from("auto")).unwrap(), None);
        let dt = serde_json::json!({"value": 2.0, "unit": "us"});
        assert_eq!(resolve_dt(&dt).unwrap(), Some(2e-6));
        assert!(resolve_dt(&Value::from(1e-6)).is_err());
    }

    #[test]
    fn defaults_resolve_and_validate_cleanly() {
        let resolved = resolve(RawConfig::default(), Some(Scenario::Charge), false).unwrap();
        let report = validate(&resolved);
        assert!(report.errors.is_empty(), "errors: {:?}", report.errors);
        assert!(
            report.warnings.is_empty(),
            "warnings: {:?}",
            report.warnings
        );
        assert_eq!(resolved.output.path, "charge.csv");
    }

    #[test]
    fn coupling_at_half_the_detuning_is_flagged_as_a_warning() {
        let mut resolved = resolve(RawConfig::default(), Some(Scenario::Charge), false).unwrap();
        // |delta_a| = pi * 1e9; half of it as a coupling breaks the
        // dispersive hierarchy without invalidating the parameters.
        resolved.physics.g_a = 0.5 * (resolved.physics.omega_q - resolved.physics.omega_a).abs();
        let report = validate(&resolved);
        assert!(report.errors.is_empty(), "errors: {:?}", report.errors);
        assert!(
            report
                .warnings
                .iter()
                .any(|w| w.contains("0.5") && w.contains("g_a")),
            "warnings: {:?}",
            report.warnings
        );
    }

    #[test]
    fn scenario_scoping_demotes_unused_failures_to_warnings() {
        let mut resolved = resolve(RawConfig::default(), Some(Scenario::Charge), false).unwrap();
        resolved.physics.i_c = -1.0;
        let report = validate(&resolved);
        assert!(report.errors.is_empty(), "errors: {:?}", report.errors);
        assert!(!report.warnings.is_empty());

        resolved.scenario = Some(Scenario::SquidLevels);
        let report = validate(&resolved);
        assert!(!report.errors.is_empty());

        resolved.scenario = None;
        let report = validate(&resolved);
        assert!(!report.errors.is_empty());
    }

    #[test]
    fn manifests_round_trip_through_json() {
        let resolved = resolve(RawConfig::default(), Some(Scenario::Readout), false).unwrap();
        let manifest = manifest_for(&resolved);
        let text = serde_json::to_string_pretty(&manifest).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.resolved, resolved);
        assert_eq!(back.config_hash, config_hash(&resolved));
        assert_eq!(back.version, MANIFEST_VERSION);

        // The marker key is what load() keys on.
        let tree: Value = serde_json::from_str(&text).unwrap();
        assert!(tree.get(MANIFEST_MARKER).is_some());
    }

    #[test]
    fn config_hash_tracks_content_not_identity() {
        let a = resolve(RawConfig::default(), Some(Scenario::Charge), false).unwrap();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.physics.beta_mag = 0.73;
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn manifest_paths_sit_next_to_the_table() {
        assert_eq!(
            manifest_path(Path::new("out/fig2a.csv")),
            Path::new("out/fig2a.manifest.json")
        );
        assert_eq!(
            manifest_path(Path::new("charge.csv")),
            Path::new("charge.manifest.json")
        );
    }
}
