//! Run configuration: TOML file, `--set` overrides, validation.

use anyhow::{Context, Result};
use cglpulse::equilibria::{Mode, SymmetricFamily};
use cglpulse::fit::FitSettings;
use cglpulse::grid::GridSpec;
use cglpulse::law::TailForm;
use cglpulse::params::ModelParams;
use cglpulse::pulse::PulseSettings;
use cglpulse::tails::TailWindow;
use cglpulse::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

/// Configuration rejected before any computation; the message names the key.
#[derive(Debug)]
pub struct ConfigInvalid(pub String);

impl std::fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config invalid: {}", self.0)
    }
}

impl std::error::Error for ConfigInvalid {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        anyhow::Error::from(ConfigInvalid(format!($($arg)*)))
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: [f64; 2],
    /// Im β is the starting guess; the pulse solve replaces it.
    pub beta: [f64; 2],
    pub gamma: [f64; 2],
    pub delta: [f64; 2],
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        let c = |v: [f64; 2]| C64::new(v[0], v[1]);
        ModelParams { alpha: c(self.alpha), beta: c(self.beta), gamma: c(self.gamma), delta: c(self.delta) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawConfig {
    /// Tail form of the N-pulse interaction law.
    pub form: TailForm,
    pub min_distance: f64,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig { form: TailForm::Hankel, min_distance: cglpulse::law::DEFAULT_MIN_DISTANCE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsConfig {
    pub half_length: f64,
    pub m: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub max_dx_lambda: f64,
    pub min_distance: f64,
}

impl Default for PsConfig {
    fn default() -> Self {
        let s = cglpulse::ps::PsSettings::default();
        PsConfig {
            half_length: s.half_length,
            m: s.m,
            gmres_tol: s.gmres.tol,
            gmres_restart: s.gmres.restart,
            gmres_max_iter: s.gmres.max_iter,
            max_dx_lambda: s.max_dx_lambda,
            min_distance: s.min_distance,
        }
    }
}

impl PsConfig {
    pub fn settings(&self) -> cglpulse::ps::PsSettings {
        let mut s = cglpulse::ps::PsSettings { half_length: self.half_length, m: self.m, max_dx_lambda: self.max_dx_lambda, min_distance: self.min_distance, ..Default::default() };
        s.gmres.tol = self.gmres_tol;
        s.gmres.restart = self.gmres_restart;
        s.gmres.max_iter = self.gmres_max_iter;
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Absolute and relative tolerance of the adaptive scheme.
    pub err: f64,
    /// Give up on a return search after this time.
    pub t_cap: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { err: 1e-8, t_cap: 1e5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), cache_dir: ".cglpulse-cache".into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DynMode {
    #[default]
    Pos,
    Ps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PulseExp {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FitExp {
    /// Reuse a pulse archive instead of solving.
    pub archive: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelTableExp {
    pub dmin: f64,
    pub dmax: f64,
    pub steps: usize,
    /// Quadrature spacing of the direct inner products.
    pub dx: f64,
}

impl Default for KernelTableExp {
    fn default() -> Self {
        KernelTableExp { dmin: 1.7, dmax: 6.0, steps: 18, dx: 0.025 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhasePlaneExp {
    pub cells: usize,
    pub orbits: usize,
    pub samples: usize,
}

impl Default for PhasePlaneExp {
    fn default() -> Self {
        PhasePlaneExp { cells: 1, orbits: 8, samples: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPulseExp {
    pub rbar0: f64,
    pub gbar0: f64,
    pub mode: DynMode,
    /// Run to this time; when absent, stop at the first return to ḡ = π/2.
    pub t_end: Option<f64>,
    pub sample_dt: f64,
}

impl Default for TwoPulseExp {
    fn default() -> Self {
        TwoPulseExp { rbar0: 2.56, gbar0: FRAC_PI_2, mode: DynMode::Pos, t_end: None, sample_dt: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnMapExp {
    pub rmin: f64,
    pub rmax: f64,
    pub steps: usize,
    pub mode: DynMode,
}

impl Default for ReturnMapExp {
    fn default() -> Self {
        ReturnMapExp { rmin: 2.0, rmax: 3.0, steps: 6, mode: DynMode::Pos }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsRunExp {
    /// Slow state (x₁, y₁, g₁, ..., x_N, y_N, g_N).
    pub state: Vec<f64>,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Times at which w and U are written out.
    pub snapshots: Vec<f64>,
}

impl Default for PsRunExp {
    fn default() -> Self {
        PsRunExp { state: vec![1.28, 0.0, FRAC_PI_2, -1.28, 0.0, 0.0], t_end: 1000.0, sample_dt: 10.0, snapshots: vec![0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointsExp {
    pub n: usize,
    pub mode: DynMode,
    /// Starting points in the reduced unknowns; geometric guesses when empty.
    pub guesses: Vec<Vec<f64>>,
    /// Search the family of three pulses on a vertical line (N = 3 only).
    pub lined_up: bool,
}

impl Default for FixedPointsExp {
    fn default() -> Self {
        FixedPointsExp { n: 3, mode: DynMode::Pos, guesses: Vec::new(), lined_up: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinExp {
    pub n: usize,
    /// g₁ − g_N of every start.
    pub g_offset: f64,
    pub grid: [usize; 2],
    /// (Δx_min, Δx_max, Δy_min, Δy_max) of r₁ − r_N.
    pub window: [f64; 4],
    pub t_end: f64,
    pub tol: f64,
    pub err: f64,
    pub mode: DynMode,
}

impl Default for BasinExp {
    fn default() -> Self {
        BasinExp { n: 3, g_offset: PI, grid: [21, 21], window: [-5.0, 0.0, 1.0, 4.0], t_end: 6e4, tol: 1e-4, err: 1e-10, mode: DynMode::Pos }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherentExp {
    /// (first, last, count) of the centroid separation S.
    pub s_range: (f64, f64, usize),
    /// (first, last, count) of the heading θ₁.
    pub theta_range: (f64, f64, usize),
    pub t_end: f64,
    pub dt: f64,
    /// Write every trajectory next to the outcome grid.
    pub trajectories: bool,
}

impl Default for CoherentExp {
    fn default() -> Self {
        CoherentExp { s_range: (4.0, 9.0, 21), theta_range: (0.0, PI, 21), t_end: 6e4, dt: 0.25, trajectories: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Pulse(PulseExp),
    Modes(PulseExp),
    FitConstants(FitExp),
    KernelTable(KernelTableExp),
    PhasePlane(PhasePlaneExp),
    TwoPulse(TwoPulseExp),
    ReturnMap(ReturnMapExp),
    PsRun(PsRunExp),
    FixedPoints(FixedPointsExp),
    Basin(BasinExp),
    Coherent(CoherentExp),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Pulse(_) => "pulse",
            Experiment::Modes(_) => "modes",
            Experiment::FitConstants(_) => "fit-constants",
            Experiment::KernelTable(_) => "kernel-table",
            Experiment::PhasePlane(_) => "phase-plane",
            Experiment::TwoPulse(_) => "two-pulse",
            Experiment::ReturnMap(_) => "return-map",
            Experiment::PsRun(_) => "ps-run",
            Experiment::FixedPoints(_) => "fixed-points",
            Experiment::Basin(_) => "basin",
            Experiment::Coherent(_) => "coherent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub pulse: PulseSettings,
    pub tails: TailWindow,
    pub fit: FitSettings,
    pub law: LawConfig,
    pub ps: PsConfig,
    pub integrator: IntegratorConfig,
    pub output: OutputConfig,
    pub experiment: Option<Experiment>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            pulse: PulseSettings::default(),
            tails: TailWindow::default(),
            fit: FitSettings::default(),
            law: LawConfig::default(),
            ps: PsConfig::default(),
            integrator: IntegratorConfig::default(),
            output: OutputConfig::default(),
            experiment: None,
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<ModelParams> {
        self.model.as_ref().map(|m| m.params()).ok_or_else(|| invalid!("[model] is required"))
    }
}

/// Parse `key.path=value`; the value is read as a TOML literal, or as a string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = s.split_once('=').ok_or_else(|| invalid!("override `{s}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(invalid!("override `{s}` has an empty key"));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

pub fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut table = root;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| invalid!("`{p}` in `{key}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

const MODEL_KEYS: [&str; 4] = ["alpha", "beta", "gamma", "delta"];

/// Build the effective configuration for one subcommand.
///
/// `kind` names the experiment block the subcommand runs; a file holding a
/// different block is rejected.
pub fn load(path: Option<&Path>, overrides: &[(String, toml::Value)], kind: Option<&str>) -> Result<RunConfig> {
    let mut root: toml::Table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).map_err(|e| invalid!("{}", e.message()))?
        }
        None => toml::Table::new(),
    };
    if let (Some(kind), Some(exp)) = (kind, root.get("experiment")) {
        let table = exp.as_table().ok_or_else(|| invalid!("`experiment` must be a table"))?;
        if let Some(other) = table.keys().find(|k| k.as_str() != kind) {
            return Err(invalid!("experiment.{other} does not match subcommand `{kind}`"));
        }
    }
    if let Some(kind) = kind {
        let exp = root.entry("experiment").or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let Some(t) = exp.as_table_mut() {
            t.entry(kind.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
    }
    for (k, v) in overrides {
        set_path(&mut root, k, v.clone())?;
    }
    match root.get("model") {
        None => return Err(invalid!("[model] is required (alpha, beta, gamma, delta)")),
        Some(m) => {
            let t = m.as_table().ok_or_else(|| invalid!("`model` must be a table"))?;
            for key in MODEL_KEYS {
                if !t.contains_key(key) {
                    return Err(invalid!("model.{key} is required"));
                }
            }
        }
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(root)).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().message().trim().to_string();
        if path == "." {
            invalid!("{msg}")
        } else {
            invalid!("{path}: {msg}")
        }
    })?;
    if let (Some(kind), Some(exp)) = (kind, &cfg.experiment) {
        if exp.kind() != kind {
            return Err(invalid!("experiment.{} does not match subcommand `{kind}`", exp.kind()));
        }
    }
    Ok(cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub key: String,
    pub message: String,
}

fn diag(out: &mut Vec<Diagnostic>, level: Level, key: &str, message: String) {
    out.push(Diagnostic { level, key: key.to_string(), message });
}

/// Every problem with a configuration; never stops at the first.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    use Level::*;
    let mut out = Vec::new();
    let positive = [
        ("pulse.length", cfg.pulse.length),
        ("pulse.guess_amplitude", cfg.pulse.guess_amplitude),
        ("pulse.guess_width", cfg.pulse.guess_width),
        ("fit.half_length", cfg.fit.half_length),
        ("fit.max_residual", cfg.fit.max_residual),
        ("law.min_distance", cfg.law.min_distance),
        ("ps.half_length", cfg.ps.half_length),
        ("ps.gmres_tol", cfg.ps.gmres_tol),
        ("ps.max_dx_lambda", cfg.ps.max_dx_lambda),
        ("ps.min_distance", cfg.ps.min_distance),
        ("integrator.err", cfg.integrator.err),
        ("integrator.t_cap", cfg.integrator.t_cap),
    ];
    for (k, v) in positive {
        if !(v > 0.0) {
            diag(&mut out, Error, k, format!("must be > 0, got {v}"));
        }
    }
    if cfg.pulse.n_colloc < 16 {
        diag(&mut out, Error, "pulse.n_colloc", format!("needs at least 16 collocation intervals, got {}", cfg.pulse.n_colloc));
    }
    if !(cfg.tails.r_min > 0.0 && cfg.tails.r_max > cfg.tails.r_min && cfg.tails.r_max < cfg.pulse.length) {
        diag(&mut out, Error, "tails", format!("window [{}, {}] must satisfy 0 < r_min < r_max < pulse.length", cfg.tails.r_min, cfg.tails.r_max));
    }
    for (key, m) in [("ps.m", cfg.ps.m), ("fit.m", cfg.fit.m)] {
        let spec = GridSpec::new([0.0, 0.0], 1.0, m);
        if !spec.boole_compatible() {
            diag(&mut out, Warning, key, format!("{} points per axis is not 4k+1 for Boole quadrature; use m = {}", spec.points(), GridSpec::suggest_m(m)));
        }
    }
    let params = match &cfg.model {
        Some(m) => Some(m.params()),
        None => {
            diag(&mut out, Error, "model", "is required (alpha, beta, gamma, delta)".into());
            None
        }
    };
    if let Some(p) = params {
        match p.dispersion() {
            Ok(d) => {
                let dx = cfg.ps.half_length / cfg.ps.m.max(1) as f64;
                if dx * d.lambda_r() > cfg.ps.max_dx_lambda {
                    diag(&mut out, Error, "ps.m", format!("dx = {dx:.4} gives dx·λ_r = {:.3} above ps.max_dx_lambda = {}", dx * d.lambda_r(), cfg.ps.max_dx_lambda));
                }
            }
            Err(e) => diag(&mut out, Error, "model", e.to_string()),
        }
    }
    if let Some(exp) = &cfg.experiment {
        validate_experiment(exp, &mut out);
    }
    out
}

fn validate_experiment(exp: &Experiment, out: &mut Vec<Diagnostic>) {
    use Level::*;
    match exp {
        Experiment::KernelTable(k) => {
            if !(k.dmin > 0.0 && k.dmax >= k.dmin && k.steps >= 1 && k.dx > 0.0) {
                diag(out, Error, "experiment.kernel-table", "needs 0 < dmin <= dmax, steps >= 1, dx > 0".into());
            }
            if k.dmin < 1.0 {
                diag(out, Warning, "experiment.kernel-table.dmin", format!("d = {} is inside the strong-interaction core (d < 1)", k.dmin));
            }
        }
        Experiment::PhasePlane(p) => {
            if p.cells == 0 || p.orbits == 0 || p.samples < 8 {
                diag(out, Error, "experiment.phase-plane", "needs cells >= 1, orbits >= 1, samples >= 8".into());
            }
        }
        Experiment::TwoPulse(t) => {
            if !(t.rbar0.abs() >= 1.0) {
                diag(out, Warning, "experiment.two-pulse.rbar0", format!("separation {} is below the weak-interaction floor d = 1", t.rbar0));
            }
            if !(t.sample_dt > 0.0) || t.t_end.is_some_and(|v| !(v > 0.0)) {
                diag(out, Error, "experiment.two-pulse", "sample_dt and t_end must be > 0".into());
            }
        }
        Experiment::ReturnMap(r) => {
            if !(r.rmin > 0.0 && r.rmax >= r.rmin && r.steps >= 1) {
                diag(out, Error, "experiment.return-map", "needs 0 < rmin <= rmax and steps >= 1".into());
            }
        }
        Experiment::PsRun(p) => {
            if p.state.is_empty() || p.state.len() % 3 != 0 {
                diag(out, Error, "experiment.ps-run.state", format!("length {} is not a positive multiple of 3", p.state.len()));
            }
            if !(p.t_end > 0.0 && p.sample_dt > 0.0) {
                diag(out, Error, "experiment.ps-run", "t_end and sample_dt must be > 0".into());
            }
            if p.snapshots.iter().any(|&t| !(0.0..=p.t_end).contains(&t)) {
                diag(out, Error, "experiment.ps-run.snapshots", "snapshot times must lie in [0, t_end]".into());
            }
        }
        Experiment::FixedPoints(f) => match SymmetricFamily::new(f.n) {
            Err(e) => diag(out, Error, "experiment.fixed-points.n", e.to_string()),
            Ok(fam) => {
                if f.lined_up && f.n != 3 {
                    diag(out, Error, "experiment.fixed-points.lined_up", "only defined for n = 3".into());
                }
                for g in &f.guesses {
                    if g.len() != fam.unknowns() {
                        diag(out, Error, "experiment.fixed-points.guesses", format!("each guess needs {} entries, got {}", fam.unknowns(), g.len()));
                    }
                }
            }
        },
        Experiment::Basin(b) => {
            let fam = match SymmetricFamily::new(b.n) {
                Ok(f) => f,
                Err(e) => {
                    diag(out, Error, "experiment.basin.n", e.to_string());
                    return;
                }
            };
            if b.grid[0] == 0 || b.grid[1] == 0 {
                diag(out, Error, "experiment.basin.grid", "needs at least one cell per axis".into());
            }
            if !(b.t_end > 0.0 && b.tol > 0.0 && b.err > 0.0) {
                diag(out, Error, "experiment.basin", "t_end, tol and err must be > 0".into());
            }
            if !(b.window[1] >= b.window[0] && b.window[3] >= b.window[2]) {
                diag(out, Error, "experiment.basin.window", "expects [xmin, xmax, ymin, ymax] with min <= max".into());
            }
            // Starts of the swept pulse against its mirror image and the pinned pulse.
            let mut closest = f64::INFINITY;
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let (dx, dy) = (b.window[i], b.window[2 + j]);
                let mirror = 2.0 * dy.abs();
                let pinned = dx.hypot(dy);
                closest = closest.min(mirror.min(pinned));
            }
            let _ = fam;
            if closest < 1.0 {
                diag(out, Warning, "experiment.basin.window", format!("starts come within d = {closest:.3} of another pulse, below the weak-interaction floor d = 1"));
            }
        }
        Experiment::Coherent(c) => {
            if c.s_range.2 == 0 || c.theta_range.2 == 0 || !(c.dt > 0.0 && c.t_end > 0.0) {
                diag(out, Error, "experiment.coherent", "needs non-empty ranges and dt, t_end > 0".into());
            }
        }
        Experiment::Pulse(_) | Experiment::Modes(_) | Experiment::FitConstants(_) => {}
    }
}

pub fn mode_of(m: DynMode) -> Mode {
    match m {
        DynMode::Pos => Mode::Pos,
        DynMode::Ps => Mode::Ps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Vec<(String, toml::Value)> {
        ["model.alpha=[0.5,0.5]", "model.beta=[-0.05,-13.2]", "model.gamma=[1.8,1.0]", "model.delta=[-0.05,0.05]"]
            .iter()
            .map(|s| parse_override(s).unwrap())
            .collect()
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut o = model();
        o.push(parse_override("ps.m=100").unwrap());
        o.push(parse_override("experiment.two-pulse.rbar0=2.4").unwrap());
        let cfg = load(None, &o, Some("two-pulse")).unwrap();
        assert_eq!(cfg.ps.m, 100);
        match cfg.experiment {
            Some(Experiment::TwoPulse(ref t)) => assert_eq!(t.rbar0, 2.4),
            other => panic!("{other:?}"),
        }
        assert!(validate(&cfg).iter().all(|d| d.level != Level::Error));
    }

    #[test]
    fn missing_gamma_is_named() {
        let o: Vec<_> = model().into_iter().filter(|(k, _)| k != "model.gamma").collect();
        let err = load(None, &o, Some("pulse")).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut o = model();
        o.push(parse_override("ps.mm=3").unwrap());
        let err = load(None, &o, None).unwrap_err().to_string();
        assert!(err.contains("mm"), "{err}");
    }

    #[test]
    fn validation_collects_every_problem() {
        let mut o = model();
        o.push(parse_override("ps.m=151").unwrap());
        o.push(parse_override("integrator.err=0").unwrap());
        o.push(parse_override("experiment.basin.window=[-1.0,0.0,0.2,1.0]").unwrap());
        let cfg = load(None, &o, Some("basin")).unwrap();
        let d = validate(&cfg);
        assert!(d.iter().any(|x| x.key == "ps.m" && x.level == Level::Warning && x.message.contains("m = 152")));
        assert!(d.iter().any(|x| x.key == "integrator.err" && x.level == Level::Error));
        assert!(d.iter().any(|x| x.key == "experiment.basin.window" && x.message.contains("d = 1")));
    }

    #[test]
    fn wrong_type_names_the_key() {
        let mut o = model();
        o.push(parse_override("model.gamma=\"big\"").unwrap());
        let err = load(None, &o, Some("pulse")).unwrap_err().to_string();
        assert!(err.contains("model.gamma"), "{err}");
    }

    #[test]
    fn mismatched_block_is_rejected() {
        let mut o = model();
        o.push(parse_override("experiment.basin.n=3").unwrap());
        assert!(load(None, &o, Some("coherent")).is_err());
    }
}
