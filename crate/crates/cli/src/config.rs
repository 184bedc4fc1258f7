//! JSON run configuration, `schema_version` 1.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "geometry": { "a_plus": 10, "a_minus": 10, "beta_plus": 0.5, "beta_minus": 0.5, "band_width": 3 },
//!   "covariance": { "sigma1_sq": 1, "sigma2_sq": 4, "rho": 0 },
//!   "reflection": { "alpha": 0, "mu_plus": 1, "mu_minus": 1 },
//!   "model": { "family": "lattice", "jump_scale": 0.5, "moment_p": 4, "epsilon": null },
//!   "simulation": { "x0": [50, 0], "horizon": 1000000, "return_radius": 20, "n_walkers": 1000, "master_seed": 1 },
//!   "phase": { "alpha": 0, "beta": 0, "n_grid": 181 },
//!   "sweep": { "alpha_grid": [0], "beta_grid": [0.1, [0.5, 0.4]], "force_critical": false },
//!   "drift": { "kind": "f_w_gamma", "w": 0.5, "gamma": 1, "probes": [[100, 9]], "n_samples": 100000 },
//!   "audit": { "radii": [100, 1000, 10000, 100000], "n_samples": 100000 }
//! }
//! ```
//!
//! Only `schema_version` and `covariance` are always required; each command
//! names the other blocks it needs.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use wedge_walk::kernel::{AuditConfig, ModelFamily, ModelSpec, ReflectionSpec};
use wedge_walk::simulator::SimConfig;
use wedge_walk::{Covariance64, FunctionKind, Geometry64, Point, Point64, WedgeError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

/// Attaches a JSON path to a library validation error. Parameter errors name
/// their field, which is appended to `block`.
pub fn located(block: &str, e: WedgeError) -> ConfigError {
    match &e {
        WedgeError::InvalidParameter { name, reason } => err(format!("{block}.{name}"), reason.clone()),
        _ => err(block, e.to_string()),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub geometry: Option<GeometryBlock>,
    pub covariance: CovarianceBlock,
    pub reflection: Option<ReflectionBlock>,
    #[serde(default)]
    pub model: ModelBlock,
    pub simulation: Option<SimulationBlock>,
    pub phase: Option<PhaseBlock>,
    pub sweep: Option<SweepBlock>,
    pub drift: Option<DriftBlock>,
    pub audit: Option<AuditBlock>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub a_plus: f64,
    pub a_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub band_width: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceBlock {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionBlock {
    /// Radians.
    pub alpha: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub family: ModelFamily,
    pub jump_scale: f64,
    pub moment_p: f64,
    pub epsilon: Option<f64>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        let spec = ModelSpec::default();
        ModelBlock {
            family: spec.family,
            jump_scale: spec.jump_scale,
            moment_p: spec.moment_p,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub x0: [f64; 2],
    pub horizon: u64,
    pub return_radius: f64,
    pub n_walkers: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseBlock {
    /// Defaults to `reflection.alpha`, or 0.
    pub alpha: Option<f64>,
    /// Defaults to `max(β⁺, β⁻)` from `geometry`, or 0.
    pub beta: Option<f64>,
    pub n_grid: usize,
}

impl Default for PhaseBlock {
    fn default() -> Self {
        PhaseBlock {
            alpha: None,
            beta: None,
            n_grid: 181,
        }
    }
}

/// A β grid entry: one exponent for both sides, or `[β⁺, β⁻]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum BetaEntry {
    Both(f64),
    Pair([f64; 2]),
}

impl BetaEntry {
    pub fn pair(self) -> (f64, f64) {
        match self {
            BetaEntry::Both(b) => (b, b),
            BetaEntry::Pair([p, m]) => (p, m),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<BetaEntry>,
    #[serde(default)]
    pub force_critical: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftBlock {
    pub kind: String,
    #[serde(default = "one")]
    pub w: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    /// Defaults to the angle the boundary estimate is stated for.
    pub theta0: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub nu: f64,
    /// Defaults to the boundary `η` for `ell`.
    pub eta: Option<f64>,
    pub probes: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    pub states: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_audit_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub z: Option<f64>,
    pub c_drift: Option<f64>,
    pub c_reflection: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_radii() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

fn default_audit_radii() -> Vec<f64> {
    vec![1e2, 1e3, 1e4, 1e5]
}

fn default_samples() -> usize {
    100_000
}

fn point(p: [f64; 2]) -> Point64 {
    Point::new(p[0], p[1])
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("$", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            err(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(err(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        cfg.covariance()?;
        if let Some(g) = &cfg.geometry {
            Geometry64::new(g.a_plus, g.a_minus, g.beta_plus, g.beta_minus, g.band_width)
                .map_err(|e| located("geometry", e))?;
        }
        if let Some(r) = &cfg.reflection {
            if !(r.alpha.abs() < std::f64::consts::FRAC_PI_2) {
                return Err(err("reflection.alpha", format!("need |alpha| < pi/2 (radians), got {}", r.alpha)));
            }
            for (name, mu) in [("mu_plus", r.mu_plus), ("mu_minus", r.mu_minus)] {
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(err(format!("reflection.{name}"), "must be positive and finite"));
                }
            }
        }
        let m = &cfg.model;
        if !(m.moment_p > 2.0 && m.moment_p.is_finite()) {
            return Err(err("model.moment_p", "declared moment order must exceed 2"));
        }
        if !(m.jump_scale > 0.0 && m.jump_scale.is_finite()) {
            return Err(err("model.jump_scale", "must be positive and finite"));
        }
        if let Some(e) = m.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(err("model.epsilon", "must be positive"));
            }
        }
        Ok(cfg)
    }

    pub fn covariance(&self) -> Result<Covariance64, ConfigError> {
        let c = &self.covariance;
        Covariance64::new(c.sigma1_sq, c.sigma2_sq, c.rho).map_err(|e| located("covariance", e))
    }

    fn geometry_block(&self) -> Result<&GeometryBlock, ConfigError> {
        self.geometry.as_ref().ok_or_else(|| err("geometry", "block is required for this command"))
    }

    pub fn geometry(&self) -> Result<Geometry64, ConfigError> {
        let g = self.geometry_block()?;
        Geometry64::new(g.a_plus, g.a_minus, g.beta_plus, g.beta_minus, g.band_width).map_err(|e| located("geometry", e))
    }

    pub fn reflection(&self) -> Result<ReflectionSpec, ConfigError> {
        let r = self
            .reflection
            .as_ref()
            .ok_or_else(|| err("reflection", "block is required for this command"))?;
        ReflectionSpec::new(r.alpha, r.mu_plus, r.mu_minus).map_err(|e| located("reflection", e))
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            family: self.model.family,
            jump_scale: self.model.jump_scale,
            moment_p: self.model.moment_p,
        }
    }

    pub fn simulation(&self) -> Result<SimConfig, ConfigError> {
        let s = self
            .simulation
            .as_ref()
            .ok_or_else(|| err("simulation", "block is required for this command"))?;
        if s.horizon == 0 {
            return Err(err("simulation.horizon", "must be at least 1"));
        }
        if s.n_walkers == 0 {
            return Err(err("simulation.n_walkers", "must be at least 1"));
        }
        let x0 = point(s.x0);
        if !(s.return_radius > 0.0 && s.return_radius < x0.norm()) {
            return Err(err("simulation.return_radius", "need 0 < return_radius < |x0|"));
        }
        Ok(SimConfig {
            x0,
            horizon: s.horizon,
            return_radius: s.return_radius,
            n_walkers: s.n_walkers,
            master_seed: s.master_seed,
        })
    }

    pub fn sweep(&self) -> Result<&SweepBlock, ConfigError> {
        let s = self.sweep.as_ref().ok_or_else(|| err("sweep", "block is required for this command"))?;
        if s.alpha_grid.is_empty() {
            return Err(err("sweep.alpha_grid", "must not be empty"));
        }
        if s.beta_grid.is_empty() {
            return Err(err("sweep.beta_grid", "must not be empty"));
        }
        for (i, a) in s.alpha_grid.iter().enumerate() {
            if !(a.abs() < std::f64::consts::FRAC_PI_2) {
                return Err(err(format!("sweep.alpha_grid[{i}]"), format!("need |alpha| < pi/2 (radians), got {a}")));
            }
        }
        for (i, b) in s.beta_grid.iter().enumerate() {
            let (p, m) = b.pair();
            if !(p >= 0.0 && m >= 0.0 && p.is_finite() && m.is_finite()) {
                return Err(err(format!("sweep.beta_grid[{i}]"), "exponents must be nonnegative and finite"));
            }
        }
        Ok(s)
    }

    pub fn drift(&self) -> Result<(&DriftBlock, FunctionKind), ConfigError> {
        let d = self.drift.as_ref().ok_or_else(|| err("drift", "block is required for this command"))?;
        let kind = d.kind.parse().map_err(|e: WedgeError| located("drift", e))?;
        if d.n_samples < 10_000 {
            return Err(err("drift.n_samples", "need at least 10^4 samples"));
        }
        if d.probes.as_ref().is_some_and(|p| p.is_empty()) {
            return Err(err("drift.probes", "must not be empty"));
        }
        check_radii("drift.radii", &d.radii)?;
        Ok((d, kind))
    }

    pub fn audit(&self) -> Result<(AuditBlock, AuditConfig), ConfigError> {
        let a = self.audit.clone().unwrap_or(AuditBlock {
            states: None,
            radii: default_audit_radii(),
            n_samples: default_samples(),
            seed: 0,
            z: None,
            c_drift: None,
            c_reflection: None,
        });
        if a.n_samples < 10_000 {
            return Err(err("audit.n_samples", "need at least 10^4 samples per state"));
        }
        if a.states.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(err("audit.states", "must not be empty"));
        }
        check_radii("audit.radii", &a.radii)?;
        let d = AuditConfig::default();
        let cfg = AuditConfig {
            n_samples: a.n_samples,
            seed: a.seed,
            z: a.z.unwrap_or(d.z),
            c_drift: a.c_drift.unwrap_or(d.c_drift),
            c_reflection: a.c_reflection.unwrap_or(d.c_reflection),
            epsilon: self.model.epsilon,
        };
        for (name, v) in [("z", cfg.z), ("c_drift", cfg.c_drift), ("c_reflection", cfg.c_reflection)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(format!("audit.{name}"), "must be positive"));
            }
        }
        Ok((a, cfg))
    }

    /// Replaces every seed in the file.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(s) = &mut self.simulation {
            s.master_seed = seed;
        }
        if let Some(d) = &mut self.drift {
            d.seed = seed;
        }
        if let Some(a) = &mut self.audit {
            a.seed = seed;
        } else {
            self.audit = Some(AuditBlock {
                states: None,
                radii: default_audit_radii(),
                n_samples: default_samples(),
                seed,
                z: None,
                c_drift: None,
                c_reflection: None,
            });
        }
    }
}

fn check_radii(path: &str, radii: &[f64]) -> Result<(), ConfigError> {
    if radii.is_empty() {
        return Err(err(path, "must not be empty"));
    }
    if let Some(i) = radii.iter().position(|r| !(*r > 1.0 && r.is_finite())) {
        return Err(err(format!("{path}[{i}]"), "radii must be finite and greater than 1"));
    }
    Ok(())
}

pub fn points(ps: &[[f64; 2]]) -> Vec<Point64> {
    ps.iter().map(|&p| point(p)).collect()
}
