use serde::Serialize;

use super::survival::survival;
use super::tail::tail_exponent_auto;
use super::verdict::{classify, VerdictKind};
use crate::error::Result;
use crate::geometry::Region;
use crate::kernel::{build_model, derive_seed, ModelSpec, ReflectionSpec};
use crate::lyapunov::{sign_table, DriftSign, FunctionKind, LyapunovParams};
use crate::simulator::{run_ensemble, SimConfig};
use crate::spectral::beta_c;
use crate::{Covariance64, Geometry64, Point64};

/// Everything a sweep cell needs besides `(α, β⁺, β⁻)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSettings {
    pub a_plus: f64,
    pub a_minus: f64,
    pub band_width: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub model: ModelSpec,
    pub x0: Point64,
    pub return_radius: f64,
    /// Shorter horizon `T`; each cell simulates to `2T`.
    pub horizon: u64,
    pub n_walkers: usize,
    pub master_seed: u64,
    /// Simulate cells with `max(β⁺, β⁻) = β_c` instead of reporting drift signs.
    pub force_critical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub rho: f64,
    pub beta_c: f64,
    /// Only for `max(β⁺, β⁻) < 1`.
    pub s0: Option<f64>,
    pub verdict: String,
    pub s_t: Option<f64>,
    pub s_2t: Option<f64>,
    pub tail_hat: Option<f64>,
    pub tail_se: Option<f64>,
    pub note: String,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 14] = [
        "alpha",
        "beta_plus",
        "beta_minus",
        "sigma1_sq",
        "sigma2_sq",
        "rho",
        "beta_c",
        "s0",
        "verdict",
        "S_T",
        "S_2T",
        "tail_hat",
        "tail_se",
        "note",
    ];

    pub fn csv_row(&self) -> [String; 14] {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        [
            self.alpha.to_string(),
            self.beta_plus.to_string(),
            self.beta_minus.to_string(),
            self.sigma1_sq.to_string(),
            self.sigma2_sq.to_string(),
            self.rho.to_string(),
            format!("{:.12}", self.beta_c),
            opt(self.s0),
            self.verdict.clone(),
            opt(self.s_t),
            opt(self.s_2t),
            opt(self.tail_hat),
            opt(self.tail_se),
            self.note.clone(),
        ]
    }
}

const CRITICAL_TOL: f64 = 1e-12;

/// One row per `(α, β⁺, β⁻)` cell, in grid order (α outer). A failing cell is
/// reported in its row and the sweep moves on. `on_row` sees each row as it completes.
pub fn phase_sweep(
    cov: &Covariance64,
    alpha_grid: &[f64],
    beta_grid: &[(f64, f64)],
    settings: &SweepSettings,
    mut on_row: impl FnMut(&SweepRow),
) -> Vec<SweepRow> {
    let mut rows = vec![];
    for (i, &alpha) in alpha_grid.iter().enumerate() {
        for (j, &(bp, bm)) in beta_grid.iter().enumerate() {
            let cell = (i * beta_grid.len() + j) as u64;
            let mut row = SweepRow {
                alpha,
                beta_plus: bp,
                beta_minus: bm,
                sigma1_sq: cov.sigma1_sq(),
                sigma2_sq: cov.sigma2_sq(),
                rho: cov.rho(),
                beta_c: f64::NAN,
                s0: None,
                verdict: String::new(),
                s_t: None,
                s_2t: None,
                tail_hat: None,
                tail_se: None,
                note: String::new(),
            };
            if let Err(e) = run_cell(cov, alpha, bp, bm, settings, derive_seed(settings.master_seed, cell), &mut row) {
                row.verdict = "Error".into();
                row.note = e.to_string();
            }
            on_row(&row);
            rows.push(row);
        }
    }
    rows
}

fn run_cell(
    cov: &Covariance64,
    alpha: f64,
    bp: f64,
    bm: f64,
    st: &SweepSettings,
    seed: u64,
    row: &mut SweepRow,
) -> Result<()> {
    let bc = beta_c(cov, alpha)?;
    row.beta_c = bc;
    let beta = bp.max(bm);
    if beta < 1.0 {
        row.s0 = Some(0.5 * (1.0 - beta / bc));
    }
    let geom = Geometry64::new(st.a_plus, st.a_minus, bp, bm, st.band_width)?;
    let refl = ReflectionSpec::new(alpha, st.mu_plus, st.mu_minus)?;
    if (beta - bc).abs() <= CRITICAL_TOL && !st.force_critical {
        row.verdict = "Critical".into();
        row.note = critical_note(cov, alpha, geom, refl, beta)?;
        return Ok(());
    }
    let model = build_model(geom, refl, *cov, &st.model)?;
    let cfg = SimConfig {
        x0: st.x0,
        horizon: 2 * st.horizon,
        return_radius: st.return_radius,
        n_walkers: st.n_walkers,
        master_seed: seed,
    };
    let records = run_ensemble(model.as_ref(), &cfg)?;
    let long = survival(&records, cfg.horizon)?;
    let short = long.truncated(st.horizon)?;
    let v = classify(&short, &long)?;
    row.verdict = v.kind.label().into();
    row.s_t = Some(v.evidence.s_t);
    row.s_2t = Some(v.evidence.s_2t);
    row.note = format!(
        "delta={:.6} radius={:.6} slope={:.4}",
        v.evidence.delta, v.evidence.radius, v.evidence.slope
    );
    if v.kind == VerdictKind::RecurrentLike {
        match tail_exponent_auto(&long) {
            Ok(t) => {
                row.tail_hat = Some(t.exponent_hat);
                row.tail_se = Some(t.std_error);
            }
            Err(e) => row.note.push_str(&format!("; tail: {e}")),
        }
    }
    Ok(())
}

/// Signs of the `g_γ` and `ℓ` drifts at the critical exponent.
fn critical_note(cov: &Covariance64, alpha: f64, geom: Geometry64, refl: ReflectionSpec, beta: f64) -> Result<String> {
    let model_free = crate::lyapunov::DriftSetting::new(geom, *cov, alpha, refl.mu_plus, refl.mu_minus)?;
    let gamma = 0.5 * beta.min(1.0 - beta).min(model_free.moment_p - 2.0);
    let params = LyapunovParams {
        gamma,
        ..Default::default()
    };
    let sym = |s: DriftSign| match s {
        DriftSign::Negative => "-",
        DriftSign::Zero => "0",
        DriftSign::Positive => "+",
    };
    let mut parts = vec![];
    for kind in [FunctionKind::GGamma, FunctionKind::Ell] {
        let table = sign_table(kind, &params, &model_free, 1e4)?;
        let cells: Vec<String> = table
            .iter()
            .map(|(r, s)| {
                let tag = match r {
                    Region::Interior => "int",
                    Region::BoundaryUpper => "up",
                    Region::BoundaryLower => "low",
                    Region::Outside => "out",
                };
                format!("{tag}{}", sym(*s))
            })
            .collect();
        parts.push(format!("{}[{}]", kind.label(), cells.join(" ")));
    }
    Ok(parts.join(" "))
}
