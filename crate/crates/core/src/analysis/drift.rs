use serde::Serialize;

use crate::error::{Result, WedgeError};
use crate::geometry::Region;
use crate::kernel::{derive_seed, IncrementModel};
use crate::lyapunov::{evaluate, predicted_drift, FunctionKind};
use crate::simulator::{empirical_drift, DriftEstimate};
use crate::{Params64, Point64};

/// Prediction and estimate agree when they are this many standard errors apart or closer.
pub const SE_BAND: f64 = 3.0;
pub const RATIO_BAND: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftFlag {
    Pass,
    Fail,
    /// The prediction is nonzero but smaller than the resolution of the estimate.
    LowPower,
}

impl DriftFlag {
    pub fn label(self) -> &'static str {
        match self {
            DriftFlag::Pass => "PASS",
            DriftFlag::Fail => "FAIL",
            DriftFlag::LowPower => "LOW-POWER",
        }
    }

    /// Tolerance policy: a nonzero prediction under `3·SE` cannot be resolved;
    /// otherwise agreement within `3·SE`, or a ratio in `[0.5, 2]` since the
    /// prediction is only the leading term. `remainder` is the size below which a
    /// discrepancy counts as a higher-order term, `‖x‖^{order-1}` in [`drift_report`];
    /// it matters when the prediction is zero and the estimate has no noise.
    pub fn judge(estimate: &DriftEstimate, predicted: f64, remainder: f64) -> Self {
        let band = SE_BAND * estimate.std_error;
        if predicted != 0.0 && predicted.abs() < band {
            return DriftFlag::LowPower;
        }
        let gap = (estimate.mean - predicted).abs();
        if gap <= band || gap <= remainder {
            return DriftFlag::Pass;
        }
        match ratio(estimate.mean, predicted) {
            Some(r) if (RATIO_BAND.0..=RATIO_BAND.1).contains(&r) => DriftFlag::Pass,
            _ => DriftFlag::Fail,
        }
    }
}

fn ratio(empirical: f64, predicted: f64) -> Option<f64> {
    (predicted != 0.0).then(|| empirical / predicted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub state: Point64,
    pub regime: Region,
    pub kind: FunctionKind,
    pub empirical: f64,
    pub std_error: f64,
    pub predicted: f64,
    pub order: f64,
    pub ratio: Option<f64>,
    pub flag: DriftFlag,
}

impl DriftRow {
    pub const CSV_HEADER: [&'static str; 9] = [
        "state_x1",
        "state_x2",
        "regime",
        "kind",
        "empirical",
        "std_error",
        "predicted",
        "ratio",
        "flag",
    ];

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.state.x1.to_string(),
            self.state.x2.to_string(),
            self.regime.label().to_string(),
            self.kind.label().to_string(),
            format!("{:.10e}", self.empirical),
            format!("{:.10e}", self.std_error),
            format!("{:.10e}", self.predicted),
            self.ratio.map(|r| format!("{r:.6}")).unwrap_or_default(),
            self.flag.label().to_string(),
        ]
    }
}

/// Empirical one-step drift of a Lyapunov function against its predicted leading term.
pub fn drift_report<M: IncrementModel + ?Sized>(
    model: &M,
    kind: FunctionKind,
    params: &Params64,
    probes: &[Point64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<DriftRow>> {
    if probes.is_empty() {
        return Err(WedgeError::Precondition {
            lemma: "drift_report",
            constraint: "probe list must be non-empty".into(),
        });
    }
    let setting = model.declared().drift_setting(model.geometry());
    let mut rows = vec![];
    for (i, &x) in probes.iter().enumerate() {
        let regime = model.region(x);
        if regime == Region::Outside {
            return Err(WedgeError::Domain(format!("probe ({}, {}) lies outside the wedge", x.x1, x.x2)));
        }
        let pred = predicted_drift(kind, x, regime, params, &setting)?;
        let f = |p: Point64| evaluate(kind, p, params, &setting);
        let est = empirical_drift(model, f, x, n_samples, derive_seed(seed, i as u64))?;
        rows.push(DriftRow {
            state: x,
            regime,
            kind,
            empirical: est.mean,
            std_error: est.std_error,
            predicted: pred.value,
            order: pred.order,
            ratio: ratio(est.mean, pred.value),
            flag: DriftFlag::judge(&est, pred.value, x.norm().powf(pred.order - 1.0)),
        });
    }
    Ok(rows)
}

/// Log-spaced norms in `[lo, hi]`, `per_decade` per decade, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let k = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=k).map(|i| lo * (hi / lo).powf(i as f64 / k as f64)).collect()
}
