use serde::Serialize;

use super::survival::SurvivalCurve;
use crate::error::{Result, WedgeError};
use crate::simulator::PassageRecord;

/// Minimum number of grid points in a regression window.
pub const MIN_WINDOW_POINTS: usize = 8;
/// Default window length in decades.
pub const DEFAULT_WINDOW_DECADES: f64 = 1.5;
/// Points with fewer than this many expected survivors are left out of the default window.
pub const MIN_SURVIVORS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailMethod {
    LogLogRegression,
    Hill,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub exponent_hat: f64,
    /// For the regression, the delta-method error under the binomial covariance
    /// of the survival estimates; the residual error alone ignores that
    /// neighbouring grid points share walkers.
    pub std_error: f64,
    /// Error from the regression residuals, as if the grid points were independent.
    pub residual_se: f64,
    pub fit_window: (u64, u64),
    pub method: TailMethod,
    pub n_points: usize,
    /// `|ŝ(first half) − ŝ(second half)|` of the window, when both halves can be fitted.
    pub window_sensitivity: Option<f64>,
}

/// Minus the least-squares slope of `log Ŝ` against `log t` over grid points in `window`.
pub fn tail_exponent(curve: &SurvivalCurve, window: (u64, u64)) -> Result<TailEstimate> {
    let (lo, hi) = window;
    if !(lo >= 1 && lo < hi && hi <= curve.horizon) {
        return Err(WedgeError::Estimation(format!(
            "window ({lo}, {hi}) must satisfy 1 <= t_lo < t_hi <= horizon = {}",
            curve.horizon
        )));
    }
    let pts: Vec<_> = curve.points.iter().filter(|p| p.t >= lo && p.t <= hi).collect();
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(WedgeError::Estimation(format!(
            "window ({lo}, {hi}) holds {} grid points, need at least {MIN_WINDOW_POINTS}",
            pts.len()
        )));
    }
    if let Some(p) = pts.iter().find(|p| p.s_hat == 0.0) {
        return Err(WedgeError::Estimation(format!(
            "survival estimate is 0 at t = {} inside the window; shrink t_hi below that time",
            p.t
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.t as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.s_hat.ln()).collect();
    let (slope, se) = ols_slope(&xs, &ys);
    let s: Vec<f64> = pts.iter().map(|p| p.s_hat).collect();
    Ok(TailEstimate {
        exponent_hat: -slope,
        std_error: binomial_slope_se(&xs, &s, curve.n),
        residual_se: se,
        fit_window: (lo, hi),
        method: TailMethod::LogLogRegression,
        n_points: pts.len(),
        window_sensitivity: None,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    (slope, se)
}

/// `Cov(log Ŝ(t_i), log Ŝ(t_j)) ≈ (1 − S(t_i)) / (n S(t_i))` for `t_i ≤ t_j`,
/// pushed through the regression weights.
fn binomial_slope_se(xs: &[f64], s: &[f64], n: usize) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let c: Vec<f64> = xs.iter().map(|x| (x - mx) / sxx).collect();
    let v: Vec<f64> = s.iter().map(|&si| (1.0 - si) / (n as f64 * si)).collect();
    let mut var = 0.0;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            var += c[i] * c[j] * v[i.min(j)];
        }
    }
    var.max(0.0).sqrt()
}

/// The last [`DEFAULT_WINDOW_DECADES`] decades before the first grid time where
/// `Ŝ` drops below `MIN_SURVIVORS / n`.
pub fn default_window(curve: &SurvivalCurve) -> Result<(u64, u64)> {
    let floor = MIN_SURVIVORS / curve.n as f64;
    let hi = curve
        .points
        .iter()
        .take_while(|p| p.s_hat >= floor)
        .map(|p| p.t)
        .last()
        .unwrap_or(0);
    let lo = ((hi as f64) / 10f64.powf(DEFAULT_WINDOW_DECADES)).round().max(1.0) as u64;
    if hi <= lo {
        return Err(WedgeError::Estimation(format!(
            "survival falls below {MIN_SURVIVORS} walkers before any usable window; increase n_walkers"
        )));
    }
    Ok((lo, hi))
}

/// Regression over the default window, with the window-sensitivity diagnostic.
pub fn tail_exponent_auto(curve: &SurvivalCurve) -> Result<TailEstimate> {
    let (lo, hi) = default_window(curve)?;
    let mut est = tail_exponent(curve, (lo, hi))?;
    let mid = ((lo as f64) * (hi as f64)).sqrt().round() as u64;
    if let (Ok(a), Ok(b)) = (tail_exponent(curve, (lo, mid)), tail_exponent(curve, (mid, hi))) {
        est.window_sensitivity = Some((a.exponent_hat - b.exponent_hat).abs());
    }
    Ok(est)
}

/// Hill-type estimate from the `k` largest return times, with censored walkers
/// entering at the horizon and the estimate scaled by the uncensored share
/// of the top `k`.
pub fn hill_exponent(records: &[PassageRecord], k: usize) -> Result<TailEstimate> {
    let mut taus: Vec<(u64, bool)> = records.iter().map(|r| (r.tau, r.censored)).collect();
    if k < 2 || k >= taus.len() {
        return Err(WedgeError::Estimation(format!("need 2 <= k < {} for the Hill estimate", taus.len())));
    }
    taus.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let threshold = taus[k].0 as f64;
    let logs: f64 = taus[..k].iter().map(|t| (t.0 as f64 / threshold).ln()).sum::<f64>() / k as f64;
    let uncensored = taus[..k].iter().filter(|t| !t.1).count() as f64 / k as f64;
    if logs <= 0.0 || uncensored == 0.0 {
        return Err(WedgeError::Estimation("top order statistics carry no tail information".into()));
    }
    let s = uncensored / logs;
    Ok(TailEstimate {
        exponent_hat: s,
        std_error: s / (k as f64 * uncensored).sqrt(),
        residual_se: f64::NAN,
        fit_window: (taus[k].0, taus[0].0),
        method: TailMethod::Hill,
        n_points: k,
        window_sensitivity: None,
    })
}
