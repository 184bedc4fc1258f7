//! Trajectories, return times and one-step drift estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WedgeError};
use crate::kernel::{derive_seed, rng_from_seed, IncrementModel};
use crate::Point64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: Point64,
    pub horizon: u64,
    pub return_radius: f64,
    pub n_walkers: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate<M: IncrementModel + ?Sized>(&self, model: &M) -> Result<()> {
        if !model.contains(self.x0) {
            return Err(WedgeError::Domain(format!("x0 = ({}, {}) is not a state of the model", self.x0.x1, self.x0.x2)));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.n_walkers == 0 {
            return Err(invalid("n_walkers", "must be at least 1"));
        }
        if !(self.return_radius > 0.0 && self.return_radius < self.x0.norm()) {
            return Err(invalid("return_radius", "need 0 < r < |x0|"));
        }
        Ok(())
    }
}

/// Outcome of one walker. `tau` is the return time, or the horizon when `censored`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub walker_id: u64,
    pub tau: u64,
    pub censored: bool,
    pub max_norm: f64,
    pub final_norm: f64,
    pub seed_used: u64,
}

impl PassageRecord {
    /// Header of the record CSV; matches the order of [`PassageRecord::csv_row`].
    pub const CSV_HEADER: [&'static str; 6] = ["walker_id", "tau", "censored", "max_norm", "final_norm", "seed"];

    pub fn csv_row(&self) -> [String; 6] {
        [
            self.walker_id.to_string(),
            self.tau.to_string(),
            (self.censored as u8).to_string(),
            format!("{:.17e}", self.max_norm),
            format!("{:.17e}", self.final_norm),
            self.seed_used.to_string(),
        ]
    }

    /// Whether `τ > t`; censored walkers survive every `t` up to the horizon.
    pub fn survives(&self, t: u64) -> bool {
        self.censored || self.tau > t
    }
}

/// Runs walker `walker_id` until `‖ξ_n‖ ≤ r` for some `n ≥ 1` or the horizon.
pub fn run_one<M: IncrementModel + ?Sized>(model: &M, cfg: &SimConfig, walker_id: u64) -> Result<PassageRecord> {
    let seed = derive_seed(cfg.master_seed, walker_id);
    let mut rng = rng_from_seed(seed);
    let r2 = cfg.return_radius * cfg.return_radius;
    let mut x = cfg.x0;
    let mut max_sq = x.norm_sq();
    for n in 1..=cfg.horizon {
        let y = model.step(x, &mut rng);
        if !model.contains(y) {
            return Err(WedgeError::Containment {
                walker_id,
                step: n,
                from: (x.x1, x.x2),
                to: (y.x1, y.x2),
            });
        }
        x = y;
        let q = x.norm_sq();
        max_sq = max_sq.max(q);
        if q <= r2 {
            return Ok(PassageRecord {
                walker_id,
                tau: n,
                censored: false,
                max_norm: max_sq.sqrt(),
                final_norm: q.sqrt(),
                seed_used: seed,
            });
        }
    }
    Ok(PassageRecord {
        walker_id,
        tau: cfg.horizon,
        censored: true,
        max_norm: max_sq.sqrt(),
        final_norm: x.norm(),
        seed_used: seed,
    })
}

/// Every walker's outcome, in walker order, failures included.
pub fn run_ensemble_outcomes<M: IncrementModel + ?Sized>(model: &M, cfg: &SimConfig) -> Result<Vec<Result<PassageRecord>>> {
    cfg.validate(model)?;
    Ok((0..cfg.n_walkers as u64)
        .into_par_iter()
        .map(|id| run_one(model, cfg, id))
        .collect())
}

pub fn run_ensemble<M: IncrementModel + ?Sized>(model: &M, cfg: &SimConfig) -> Result<Vec<PassageRecord>> {
    run_ensemble_outcomes(model, cfg)?.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of increments drawn.
    pub n_samples: usize,
    pub antithetic: bool,
}

/// Monte Carlo estimate of `E_x[f(ξ₁) − f(x)]`.
///
/// Where the model's increment law is symmetric, each draw `Δ` is paired with
/// `−Δ` and the pair average is one observation.
pub fn empirical_drift<M, F>(model: &M, f: F, x: Point64, n_samples: usize, seed: u64) -> Result<DriftEstimate>
where
    M: IncrementModel + ?Sized,
    F: Fn(Point64) -> Result<f64>,
{
    if n_samples < 10_000 {
        return Err(invalid("n_samples", "need at least 10^4 samples"));
    }
    if !model.contains(x) {
        return Err(WedgeError::Domain(format!("({}, {}) is not a state of the model", x.x1, x.x2)));
    }
    let fx = f(x)?;
    let region = model.region(x);
    let antithetic = model.is_symmetric(x, region);
    let mut rng = rng_from_seed(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let n_obs = if antithetic { n_samples / 2 } else { n_samples };
    for k in 1..=n_obs {
        let d = model.sample_increment(x, region, &mut rng);
        let v = if antithetic {
            0.5 * ((f(x + d)? - fx) + (f(x - d)? - fx))
        } else {
            f(x + d)? - fx
        };
        let e = v - mean;
        mean += e / k as f64;
        m2 += e * (v - mean);
    }
    let var = m2 / (n_obs as f64 - 1.0);
    Ok(DriftEstimate {
        mean,
        std_error: (var / n_obs as f64).sqrt(),
        n_samples: if antithetic { 2 * n_obs } else { n_obs },
        antithetic,
    })
}

/// `E_x[f(ξ₁) − f(x)]` summed over the model's finite support, when it has one.
pub fn exact_drift<M, F>(model: &M, f: F, x: Point64) -> Result<Option<f64>>
where
    M: IncrementModel + ?Sized,
    F: Fn(Point64) -> Result<f64>,
{
    let Some(support) = model.support(x) else { return Ok(None) };
    let fx = f(x)?;
    let mut acc = 0.0;
    for (d, p) in support {
        acc += p * (f(x + d)? - fx);
    }
    Ok(Some(acc))
}
