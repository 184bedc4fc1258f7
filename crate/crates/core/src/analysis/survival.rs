use serde::Serialize;

use crate::error::{Result, WedgeError};
use crate::simulator::PassageRecord;

/// Grid points per decade of the survival curve.
pub const GRID_PER_DECADE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalPoint {
    pub t: u64,
    pub s_hat: f64,
    /// Binomial standard error `√(Ŝ(1−Ŝ)/n)`.
    pub radius: f64,
}

/// Empirical `P(τ > t)` from an ensemble, on a log-spaced grid up to the horizon.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub n: usize,
    pub horizon: u64,
    pub points: Vec<SurvivalPoint>,
    /// Uncensored return times, sorted.
    #[serde(skip)]
    taus: Vec<u64>,
    n_censored: usize,
}

impl SurvivalCurve {
    /// `Ŝ(t)` for any `t ≤ horizon`.
    pub fn at(&self, t: u64) -> f64 {
        assert!(t <= self.horizon, "survival queried beyond the horizon");
        let returned = self.taus.partition_point(|&tau| tau <= t);
        (self.taus.len() - returned + self.n_censored) as f64 / self.n as f64
    }

    pub fn n_censored(&self) -> usize {
        self.n_censored
    }

    /// The curve the same walkers would have produced under horizon `t`.
    pub fn truncated(&self, t: u64) -> Result<SurvivalCurve> {
        if t == 0 || t > self.horizon {
            return Err(WedgeError::Estimation(format!("cannot truncate horizon {} to {t}", self.horizon)));
        }
        let kept = self.taus.partition_point(|&tau| tau <= t);
        Ok(build(self.n, t, self.taus[..kept].to_vec(), self.n - kept))
    }
}

/// Log-spaced integer grid `0, 1, …, horizon`.
pub fn time_grid(horizon: u64) -> Vec<u64> {
    let mut g = vec![0u64];
    let top = (horizon as f64).log10();
    let steps = (top * GRID_PER_DECADE).ceil() as u64;
    for k in 0..=steps {
        let t = (10f64.powf(k as f64 / GRID_PER_DECADE)).round() as u64;
        let t = t.min(horizon);
        if t > *g.last().unwrap() {
            g.push(t);
        }
    }
    if *g.last().unwrap() < horizon {
        g.push(horizon);
    }
    g
}

/// Censored walkers count as `τ > t` for every `t` up to the horizon, which is exact.
pub fn survival(records: &[PassageRecord], horizon: u64) -> Result<SurvivalCurve> {
    if records.is_empty() {
        return Err(WedgeError::Precondition {
            lemma: "survival",
            constraint: "records must be non-empty".into(),
        });
    }
    let mut ids: Vec<u64> = records.iter().map(|r| r.walker_id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != records.len() {
        return Err(mixed("duplicate walker ids"));
    }
    if records.iter().any(|r| r.censored && r.tau != horizon) {
        return Err(mixed("a censored record has a different horizon"));
    }
    if records.iter().any(|r| !r.censored && (r.tau == 0 || r.tau > horizon)) {
        return Err(mixed("a return time lies outside [1, horizon]"));
    }
    let mut taus: Vec<u64> = records.iter().filter(|r| !r.censored).map(|r| r.tau).collect();
    taus.sort_unstable();
    let n_censored = records.len() - taus.len();
    Ok(build(records.len(), horizon, taus, n_censored))
}

fn mixed(why: &str) -> WedgeError {
    WedgeError::Precondition {
        lemma: "survival",
        constraint: format!("records must share one configuration: {why}"),
    }
}

fn build(n: usize, horizon: u64, taus: Vec<u64>, n_censored: usize) -> SurvivalCurve {
    let mut curve = SurvivalCurve {
        n,
        horizon,
        points: vec![],
        taus,
        n_censored,
    };
    curve.points = time_grid(horizon)
        .into_iter()
        .map(|t| {
            let s = curve.at(t);
            SurvivalPoint {
                t,
                s_hat: s,
                radius: (s * (1.0 - s) / n as f64).sqrt(),
            }
        })
        .collect();
    curve
}

#[cfg(test)]
pub(crate) fn synthetic(taus: &[f64], horizon: u64) -> Vec<PassageRecord> {
    taus.iter()
        .enumerate()
        .map(|(i, &t)| {
            let tau = t.ceil().max(1.0);
            let censored = tau > horizon as f64;
            PassageRecord {
                walker_id: i as u64,
                tau: if censored { horizon } else { tau as u64 },
                censored,
                max_norm: 0.0,
                final_norm: 0.0,
                seed_used: 0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_shape() {
        let g = time_grid(1_000_000);
        assert_eq!(g[0], 0);
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 100 && g.len() < 130);
        assert_eq!(time_grid(1), vec![0, 1]);
    }

    #[test]
    fn degenerate_ensembles() {
        let all_one = synthetic(&[1.0; 10], 100);
        let c = survival(&all_one, 100).unwrap();
        assert_eq!(c.at(0), 1.0);
        assert!(c.points.iter().filter(|p| p.t >= 1).all(|p| p.s_hat == 0.0));
        let censored = synthetic(&[1e9; 10], 100);
        let c = survival(&censored, 100).unwrap();
        assert!(c.points.iter().all(|p| p.s_hat == 1.0 && p.radius == 0.0));
    }

    #[test]
    fn rejects_mixed_records() {
        let mut r = synthetic(&[5.0, 1e9], 100);
        assert!(survival(&r, 200).is_err());
        r[1].walker_id = 0;
        assert!(survival(&r, 100).is_err());
        assert!(survival(&[], 100).is_err());
    }

    #[test]
    fn pareto_within_binomial_bands() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let taus: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powf(-2.0)).collect();
        let c = survival(&synthetic(&taus, 1_000_000), 1_000_000).unwrap();
        let mut worst: f64 = 0.0;
        for p in c.points.iter().filter(|p| p.t >= 1) {
            // P(τ > t) = P(U < t^{-1/2}) for the integer ceiling of U^{-2}.
            let exact = (p.t as f64).powf(-0.5);
            let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-12);
            worst = worst.max((p.s_hat - exact).abs() / se);
        }
        assert!(worst < 4.5, "max deviation {worst} standard errors");
    }

    #[test]
    fn truncation_matches_shorter_horizon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let taus: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>().powf(-3.0)).collect();
        let long = survival(&synthetic(&taus, 2000), 2000).unwrap();
        let short = survival(&synthetic(&taus, 1000), 1000).unwrap();
        let cut = long.truncated(1000).unwrap();
        assert_eq!(cut.points, short.points);
        assert_eq!(cut.n_censored(), short.n_censored());
    }

    #[test]
    fn nonincreasing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let taus: Vec<f64> = (0..3000).map(|_| rng.gen::<f64>().powf(-4.0)).collect();
        let c = survival(&synthetic(&taus, 100_000), 100_000).unwrap();
        assert!(c.points.windows(2).all(|w| w[0].s_hat >= w[1].s_hat));
    }
}
