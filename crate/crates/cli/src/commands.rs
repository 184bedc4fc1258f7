use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use wedge_walk::analysis::{
    drift_report, phase_sweep, survival, tail_exponent_auto, SurvivalCurve, SweepRow, SweepSettings, TailEstimate,
};
use wedge_walk::kernel::{
    build_model, moment_audit, probe_states, AuditConfig, AuditFlag, IncrementModel, ModelFamily, MomentAudit,
    ReflectionSpec,
};
use wedge_walk::lyapunov::{lemma_eta, lemma_theta0, predicted_drift};
use wedge_walk::simulator::{run_ensemble_outcomes, PassageRecord};
use wedge_walk::spectral::{self, BcExtrema};
use wedge_walk::{DerivedAngles, Geometry64, Params64, Point, Region, Side};

use crate::config::{located, points, ConfigError, RunConfig, SCHEMA_VERSION};

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    /// Some walkers failed; the rest of the output was written.
    Partial(String),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Partial(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Partial(m) => write!(f, "partial failure: {m}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn beta_one_warnings(label: &str, bp: f64, bm: f64) -> Option<String> {
    (bp == 1.0 || bm == 1.0).then(|| format!("{label}: beta = 1 is not covered by any of the threshold results"))
}

fn model_for(cfg: &RunConfig, geom: Geometry64, refl: ReflectionSpec) -> Result<Box<dyn IncrementModel>, Failure> {
    let model = build_model(geom, refl, cfg.covariance()?, &cfg.model_spec()).map_err(|e| located("model", e))?;
    if cfg.model.family == ModelFamily::Continuous {
        check_boundary_mean(model.as_ref())?;
    }
    Ok(model)
}

/// The continuous model shortens steps that would leave the wedge, which moves the
/// boundary mean. Refuse geometries where that error is visible at the probe states.
fn check_boundary_mean(model: &dyn IncrementModel) -> Result<(), Failure> {
    let probes: Vec<_> = probe_states(model.geometry(), &[1e2, 1e3, 1e4])
        .into_iter()
        .filter(|&x| model.region(x).is_boundary())
        .collect();
    let cfg = AuditConfig {
        n_samples: 20_000,
        ..Default::default()
    };
    let audit = moment_audit(model, &probes, &cfg).map_err(|e| located("model", e))?;
    if let Some(s) = audit.flagged().find(|s| s.flag == AuditFlag::BoundaryMean) {
        return Err(Failure::Config(ConfigError {
            path: "model".into(),
            message: format!(
                "boundary mean error {:.3e} at ({}, {}) exceeds c/|x| (c = {}); reduce model.jump_scale",
                s.mean_error, s.state.x1, s.state.x2, cfg.c_reflection
            ),
        }));
    }
    Ok(())
}

#[derive(Serialize)]
struct GridPoint {
    alpha: f64,
    beta_c: f64,
}

#[derive(Serialize)]
struct PhaseReport {
    schema_version: u32,
    sigma1_sq: f64,
    sigma2_sq: f64,
    rho: f64,
    alpha: f64,
    beta: f64,
    beta_c: f64,
    /// `null` unless `β < 1`.
    s0: Option<f64>,
    bc_extrema: BcExtrema<f64>,
    derived_angles: DerivedAngles<f64>,
    beta_c_grid: Vec<GridPoint>,
    warnings: Vec<String>,
}

pub fn phase(cfg: &RunConfig, out: &Path) -> CmdResult {
    let cov = cfg.covariance()?;
    let block = cfg.phase.unwrap_or_default();
    let alpha = block.alpha.or(cfg.reflection.map(|r| r.alpha)).unwrap_or(0.0);
    let beta = block
        .beta
        .or(cfg.geometry.map(|g| g.beta_plus.max(g.beta_minus)))
        .unwrap_or(0.0);
    let alpha_path = if block.alpha.is_some() { "phase.alpha" } else { "reflection.alpha" };
    if !(alpha.abs() < FRAC_PI_2) {
        return Err(ConfigError {
            path: alpha_path.into(),
            message: format!("need |alpha| < pi/2 (radians), got {alpha}"),
        }
        .into());
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(ConfigError {
            path: "phase.beta".into(),
            message: "must be nonnegative".into(),
        }
        .into());
    }
    if block.n_grid < 2 {
        return Err(ConfigError {
            path: "phase.n_grid".into(),
            message: "need at least 2 grid points".into(),
        }
        .into());
    }
    let mut warnings = vec![];
    warnings.extend(beta_one_warnings("phase.beta", beta, beta));
    if let Some(g) = &cfg.geometry {
        warnings.extend(beta_one_warnings("geometry", g.beta_plus, g.beta_minus));
    }
    warnings.iter().for_each(|w| warn(w));
    // Open interval: β_c(±π/2) = 1 is a limit, not a valid reflection angle.
    let n = block.n_grid;
    let beta_c_grid = (1..=n)
        .map(|k| {
            let a = -FRAC_PI_2 + std::f64::consts::PI * k as f64 / (n + 1) as f64;
            GridPoint {
                alpha: a,
                beta_c: spectral::beta_c(&cov, a).expect("alpha inside the open interval"),
            }
        })
        .collect();
    let bc = spectral::beta_c(&cov, alpha).map_err(|e| located("phase", e))?;
    let report = PhaseReport {
        schema_version: SCHEMA_VERSION,
        sigma1_sq: cov.sigma1_sq(),
        sigma2_sq: cov.sigma2_sq(),
        rho: cov.rho(),
        alpha,
        beta,
        beta_c: bc,
        s0: (beta < 1.0).then(|| spectral::s0(&cov, alpha, beta).expect("validated")),
        bc_extrema: spectral::bc_extrema(&cov),
        derived_angles: spectral::derived_angles(&cov, alpha).expect("validated"),
        beta_c_grid,
        warnings,
    };
    write_json(&out.join("phase.json"), &report)
}

#[derive(Serialize)]
struct SimulationSummary {
    schema_version: u32,
    model: String,
    n_walkers: usize,
    n_failed: usize,
    n_censored: usize,
    horizon: u64,
    beta_c: f64,
    /// Threshold exponent `(1 − β/β_c)/2` for `max(β⁺, β⁻) < 1`.
    s0: Option<f64>,
    tail: Option<TailEstimate>,
    tail_error: Option<String>,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> CmdResult {
    let geom = cfg.geometry()?;
    if let Some(w) = beta_one_warnings("geometry", geom.beta_plus(), geom.beta_minus()) {
        warn(&w);
    }
    let sim = cfg.simulation()?;
    let model = model_for(cfg, geom, cfg.reflection()?)?;
    sim.validate(model.as_ref()).map_err(|e| located("simulation", e))?;
    let outcomes = run_ensemble_outcomes(model.as_ref(), &sim).map_err(|e| located("simulation", e))?;
    let cov = cfg.covariance()?;
    let alpha = model.declared().reflection.alpha;
    let beta = geom.beta_plus().max(geom.beta_minus());
    let bc = spectral::beta_c(&cov, alpha).map_err(|e| located("reflection", e))?;
    let s0 = (beta < 1.0).then(|| spectral::s0(&cov, alpha, beta).expect("validated"));
    write_simulation(out, model.name(), sim.horizon, sim.master_seed, bc, s0, outcomes)
}

fn write_simulation(
    out: &Path,
    model: &str,
    horizon: u64,
    master_seed: u64,
    beta_c: f64,
    s0: Option<f64>,
    outcomes: Vec<wedge_walk::Result<PassageRecord>>,
) -> CmdResult {
    let n_walkers = outcomes.len();
    let mut records = vec![];
    let mut failures = vec![];
    for (id, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => records.push(r),
            Err(e) => failures.push((id as u64, e)),
        }
    }
    let mut w = csv::Writer::from_path(out.join("passages.csv"))?;
    w.write_record(PassageRecord::CSV_HEADER)?;
    for r in &records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    if !failures.is_empty() {
        let mut w = csv::Writer::from_path(out.join("walker_errors.csv"))?;
        w.write_record(["walker_id", "seed", "error"])?;
        for (id, e) in &failures {
            let seed = wedge_walk::kernel::derive_seed(master_seed, *id);
            w.write_record([id.to_string(), seed.to_string(), e.to_string()])?;
        }
        w.flush()?;
    }
    let (tail, tail_error) = if records.is_empty() {
        (None, Some("no successful walkers".to_string()))
    } else {
        let curve = survival(&records, horizon).map_err(|e| Failure::Other(e.into()))?;
        write_survival(&out.join("survival.csv"), &curve)?;
        match tail_exponent_auto(&curve) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let summary = SimulationSummary {
        schema_version: SCHEMA_VERSION,
        model: model.to_string(),
        n_walkers,
        n_failed: failures.len(),
        n_censored: records.iter().filter(|r| r.censored).count(),
        horizon,
        beta_c,
        s0,
        tail,
        tail_error,
    };
    write_json(&out.join("summary.json"), &summary)?;
    match failures.first() {
        None => Ok(()),
        Some((id, e)) => Err(Failure::Partial(format!(
            "{} of {n_walkers} walkers failed (first: walker {id}: {e}); see walker_errors.csv",
            failures.len()
        ))),
    }
}

fn write_survival(path: &Path, curve: &SurvivalCurve) -> CmdResult {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "s_hat", "radius"])?;
    for p in &curve.points {
        w.write_record([p.t.to_string(), format!("{:.10e}", p.s_hat), format!("{:.10e}", p.radius)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn drift_check(cfg: &RunConfig, out: &Path) -> CmdResult {
    let geom = cfg.geometry()?;
    let (block, kind) = cfg.drift()?;
    let model = model_for(cfg, geom, cfg.reflection()?)?;
    let setting = model.declared().drift_setting(&geom);
    let probes = match &block.probes {
        Some(p) => points(p),
        None => probe_states(&geom, &block.radii),
    };
    let lemma_side = if geom.beta_plus() != 1.0 { Side::Upper } else { Side::Lower };
    let theta0 = match block.theta0 {
        Some(t) => t,
        None => lemma_theta0(&setting, block.w, lemma_side).unwrap_or(0.0),
    };
    let eta = match block.eta {
        Some(e) => e,
        None => lemma_eta(&setting, lemma_side).unwrap_or(0.0),
    };
    let params = Params64 {
        w: block.w,
        gamma: block.gamma,
        theta0,
        lambda: block.lambda,
        nu: block.nu,
        eta,
    };
    // Every precondition is checked before any sampling starts.
    for (i, &x) in probes.iter().enumerate() {
        let path = if block.probes.is_some() { format!("drift.probes[{i}]") } else { "drift.radii".into() };
        let region = model.region(x);
        if region == Region::Outside || !model.contains(x) {
            return Err(ConfigError {
                path,
                message: format!("({}, {}) is not a state of the model", x.x1, x.x2),
            }
            .into());
        }
        predicted_drift(kind, x, region, &params, &setting).map_err(|e| ConfigError {
            path: "drift".into(),
            message: format!("probe ({}, {}): {e}", x.x1, x.x2),
        })?;
    }
    let rows = drift_report(model.as_ref(), kind, &params, &probes, block.n_samples, block.seed)
        .map_err(|e| Failure::Other(e.into()))?;
    let mut w = csv::Writer::from_path(out.join("drift.csv"))?;
    w.write_record(wedge_walk::analysis::DriftRow::CSV_HEADER)?;
    for r in &rows {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> CmdResult {
    let block = cfg.sweep()?;
    let g = cfg.geometry.ok_or_else(|| ConfigError {
        path: "geometry".into(),
        message: "block is required for this command (its exponents are ignored)".into(),
    })?;
    let refl = cfg.reflection()?;
    let sim = cfg.simulation()?;
    let cov = cfg.covariance()?;
    let betas: Vec<(f64, f64)> = block.beta_grid.iter().map(|b| b.pair()).collect();
    for (i, &(bp, bm)) in betas.iter().enumerate() {
        if let Some(w) = beta_one_warnings(&format!("sweep.beta_grid[{i}]"), bp, bm) {
            warn(&w);
        }
    }
    let settings = SweepSettings {
        a_plus: g.a_plus,
        a_minus: g.a_minus,
        band_width: g.band_width,
        mu_plus: refl.mu_plus,
        mu_minus: refl.mu_minus,
        model: cfg.model_spec(),
        x0: Point::new(sim.x0.x1, sim.x0.x2),
        return_radius: sim.return_radius,
        horizon: sim.horizon,
        n_walkers: sim.n_walkers,
        master_seed: sim.master_seed,
        force_critical: block.force_critical,
    };
    // Validate every cell's model up front so a bad grid fails before hours of simulation.
    for (i, &alpha) in block.alpha_grid.iter().enumerate() {
        for (j, &(bp, bm)) in betas.iter().enumerate() {
            let geom = Geometry64::new(g.a_plus, g.a_minus, bp, bm, g.band_width)
                .map_err(|e| located(&format!("sweep.beta_grid[{j}]"), e))?;
            let cell_refl = ReflectionSpec { alpha, ..refl };
            let model = model_for(cfg, geom, cell_refl).map_err(|e| match e {
                Failure::Config(c) => Failure::Config(ConfigError {
                    path: format!("sweep.alpha_grid[{i}]"),
                    message: format!("cell beta_grid[{j}]: {}: {}", c.path, c.message),
                }),
                other => other,
            })?;
            sim.validate(model.as_ref()).map_err(|e| located("simulation", e))?;
        }
    }
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    w.write_record(SweepRow::CSV_HEADER)?;
    w.flush()?;
    let mut io_error: Option<csv::Error> = None;
    let rows = phase_sweep(&cov, &block.alpha_grid, &betas, &settings, |row| {
        eprintln!(
            "cell alpha={} beta=({}, {}) beta_c={:.6} verdict={}",
            row.alpha, row.beta_plus, row.beta_minus, row.beta_c, row.verdict
        );
        if io_error.is_none() {
            if let Err(e) = w.write_record(row.csv_row()).and_then(|_| w.flush().map_err(Into::into)) {
                io_error = Some(e);
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let failed = rows.iter().filter(|r| r.verdict == "Error").count();
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} of {} cells failed; see the note column", rows.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditReport {
    schema_version: u32,
    passed: bool,
    #[serde(flatten)]
    audit: MomentAudit,
}

pub fn audit(cfg: &RunConfig, out: &Path) -> CmdResult {
    let geom = cfg.geometry()?;
    let (block, config) = cfg.audit()?;
    let model = build_model(geom, cfg.reflection()?, cfg.covariance()?, &cfg.model_spec()).map_err(|e| located("model", e))?;
    let states = match &block.states {
        Some(s) => points(s),
        None => probe_states(&geom, &block.radii),
    };
    if let Some(i) = states.iter().position(|&x| !model.contains(x)) {
        let path = if block.states.is_some() { format!("audit.states[{i}]") } else { "audit.radii".into() };
        return Err(ConfigError {
            path,
            message: format!("({}, {}) is not a state of the model", states[i].x1, states[i].x2),
        }
        .into());
    }
    let audit = moment_audit(model.as_ref(), &states, &config).map_err(|e| located("audit", e))?;
    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        passed: audit.passed(),
        audit,
    };
    if !report.passed {
        warn(&format!(
            "{} of {} states flagged",
            report.audit.flagged().count(),
            report.audit.states.len()
        ));
    }
    write_json(&out.join("audit.json"), &report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wedge_walk::WedgeError;

    fn record(id: u64) -> PassageRecord {
        PassageRecord {
            walker_id: id,
            tau: 10 + id,
            censored: false,
            max_norm: 60.0,
            final_norm: 19.0,
            seed_used: id,
        }
    }

    #[test]
    fn failed_walkers_give_error_rows_and_exit_3() {
        let dir = tempfile::tempdir().unwrap();
        let outcomes = vec![
            Ok(record(0)),
            Err(WedgeError::Containment {
                walker_id: 1,
                step: 5,
                from: (1.0, 0.0),
                to: (-1.0, 0.0),
            }),
            Ok(record(2)),
        ];
        let e = write_simulation(dir.path(), "lattice", 100, 7, 1.0, Some(0.25), outcomes).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let passages = std::fs::read_to_string(dir.path().join("passages.csv")).unwrap();
        assert_eq!(passages.lines().count(), 3);
        let errors = std::fs::read_to_string(dir.path().join("walker_errors.csv")).unwrap();
        let lines: Vec<_> = errors.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with(&format!("1,{},", wedge_walk::kernel::derive_seed(7, 1))));
        assert!(lines[1].contains("left the domain"));
    }
}
