//! Empirical check of the drift, reflection and covariance assumptions.

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, rng_from_seed, IncrementModel};
use crate::error::{invalid, Result, WedgeError};
use crate::geometry::{Point, Region, Side};
use crate::lyapunov::point_on_curve;
use crate::spectral::Mat2;
use crate::{Geometry64, Point64};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuditConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Normal quantile for the confidence radii (2.576: 99%).
    pub z: f64,
    /// Interior flag: `(‖mean‖ − radius)₊ · ‖x‖ > c_drift`.
    pub c_drift: f64,
    /// Boundary flag: `(‖mean − μn‖ − radius)₊ · ‖x‖ > c_reflection`.
    pub c_reflection: f64,
    /// Exponent for the strengthened `O(r^{-1-ε})` compatibility report.
    pub epsilon: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            n_samples: 100_000,
            seed: 0,
            z: 2.576,
            c_drift: 1.0,
            c_reflection: 10.0,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AuditFlag {
    Pass,
    InteriorDrift,
    BoundaryMean,
    Covariance,
}

/// Moments computed from a model's finite support.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactMoments {
    pub mean: Point64,
    pub cov: [[f64; 2]; 2],
    pub p_moment: f64,
}

impl ExactMoments {
    pub fn from_support(support: &[(Point64, f64)], p: f64) -> Self {
        let mut mean = Point::new(0.0, 0.0);
        let mut second = [[0.0; 2]; 2];
        let mut p_moment = 0.0;
        for &(d, w) in support {
            mean = mean + d * w;
            second[0][0] += w * d.x1 * d.x1;
            second[0][1] += w * d.x1 * d.x2;
            second[1][1] += w * d.x2 * d.x2;
            p_moment += w * d.norm().powf(p);
        }
        let c01 = second[0][1] - mean.x1 * mean.x2;
        ExactMoments {
            mean,
            cov: [
                [second[0][0] - mean.x1 * mean.x1, c01],
                [c01, second[1][1] - mean.x2 * mean.x2],
            ],
            p_moment,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateAudit {
    pub state: Point64,
    pub region: Region,
    pub n: usize,
    pub mean: Point64,
    pub cov: [[f64; 2]; 2],
    pub p_moment: f64,
    /// Radius of the mean confidence disc.
    pub mean_radius: f64,
    /// Zero in the interior, `μ^± n^±` on the boundary.
    pub target_mean: Point64,
    pub mean_error: f64,
    /// `(mean_error − mean_radius)₊ · ‖x‖`.
    pub scaled_excess: f64,
    /// `‖Ĉ − Σ‖_op`, interior states only.
    pub cov_deviation: Option<f64>,
    pub cov_radius: f64,
    pub epsilon_compatible: Option<bool>,
    pub exact: Option<ExactMoments>,
    pub flag: AuditFlag,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentAudit {
    pub model: String,
    pub config: AuditConfig,
    pub states: Vec<StateAudit>,
}

impl MomentAudit {
    pub fn passed(&self) -> bool {
        self.states.iter().all(|s| s.flag == AuditFlag::Pass)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &StateAudit> {
        self.states.iter().filter(|s| s.flag != AuditFlag::Pass)
    }
}

/// Integer states at the given norms: one on each boundary curve, rounded inward,
/// and one on the bisector of the two curve directions. All of them are states of both shipped models.
pub fn probe_states(geom: &Geometry64, radii: &[f64]) -> Vec<Point64> {
    let mut out = vec![];
    for &r in radii {
        for side in [Side::Upper, Side::Lower] {
            let p = point_on_curve(geom, side, r);
            let x1 = p.x1.round().max(1.0);
            let h = geom.boundary_height(x1, side).expect("x1 >= 1");
            out.push(Point::new(x1, side.sign::<f64>() * h.floor()));
        }
        let th = 0.5 * (point_on_curve(geom, Side::Upper, r).theta() + point_on_curve(geom, Side::Lower, r).theta());
        let p = Point::from_polar(r, th);
        out.push(Point::new(p.x1.round().max(1.0), p.x2.round()));
    }
    out.retain(|&x| geom.contains(x));
    out.dedup();
    out
}

pub fn moment_audit<M: IncrementModel + ?Sized>(
    model: &M,
    states: &[Point64],
    config: &AuditConfig,
) -> Result<MomentAudit> {
    if states.is_empty() {
        return Err(WedgeError::Precondition {
            lemma: "moment_audit".into(),
            constraint: "state list must be non-empty".into(),
        });
    }
    if config.n_samples < 10_000 {
        return Err(invalid("n_samples", "need at least 10^4 samples per state"));
    }
    if let Some(x) = states.iter().find(|x| !model.contains(**x)) {
        return Err(WedgeError::Domain(format!("audit state {x:?} is not a state of the model")));
    }
    let states = states
        .par_iter()
        .enumerate()
        .map(|(i, &x)| audit_state(model, x, derive_seed(config.seed, i as u64), config))
        .collect();
    Ok(MomentAudit {
        model: model.name().to_string(),
        config: *config,
        states,
    })
}

fn audit_state<M: IncrementModel + ?Sized>(model: &M, x: Point64, seed: u64, config: &AuditConfig) -> StateAudit {
    let region = model.region(x);
    let p = model.declared().moment_p;
    let mut rng = rng_from_seed(seed);
    let n = config.n_samples;
    // Welford updates for the mean and the co-moment matrix.
    let (mut m1, mut m2) = (0.0, 0.0);
    let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
    let (mut pm, mut m4) = (0.0, 0.0);
    for k in 1..=n {
        let d = model.sample_increment(x, region, &mut rng);
        let kf = k as f64;
        let (e1, e2) = (d.x1 - m1, d.x2 - m2);
        m1 += e1 / kf;
        m2 += e2 / kf;
        c11 += e1 * (d.x1 - m1);
        c12 += e1 * (d.x2 - m2);
        c22 += e2 * (d.x2 - m2);
        let r2 = d.norm_sq();
        pm += r2.powf(p / 2.0);
        m4 += r2 * r2;
    }
    let nf = n as f64;
    let denom = (nf - 1.0).max(1.0);
    let cov = [[c11 / denom, c12 / denom], [c12 / denom, c22 / denom]];
    let mean = Point::new(m1, m2);
    let mean_radius = config.z * ((cov[0][0] + cov[1][1]) / nf).sqrt();
    let cov_radius = 2.0 * config.z * (m4 / nf / nf).sqrt();
    let target_mean = model.target_mean(x, region);
    let mean_error = (mean - target_mean).norm();
    let excess = (mean_error - mean_radius).max(0.0);
    let r = x.norm();
    let scaled_excess = excess * r;
    let mut flag = AuditFlag::Pass;
    let mut cov_deviation = None;
    if region == Region::Interior {
        if scaled_excess > config.c_drift {
            flag = AuditFlag::InteriorDrift;
        }
        let d = model.declared().cov;
        let dev = Mat2::new(
            cov[0][0] - d.sigma1_sq(),
            cov[0][1] - d.rho(),
            cov[1][0] - d.rho(),
            cov[1][1] - d.sigma2_sq(),
        )
        .sym_op_norm();
        cov_deviation = Some(dev);
        if flag == AuditFlag::Pass && dev > cov_radius {
            flag = AuditFlag::Covariance;
        }
    } else if scaled_excess > config.c_reflection {
        flag = AuditFlag::BoundaryMean;
    }
    let limit = if region == Region::Interior {
        config.c_drift
    } else {
        config.c_reflection
    };
    let epsilon_compatible = config.epsilon.map(|e| excess * r.powf(1.0 + e) <= limit);
    StateAudit {
        state: x,
        region,
        n,
        mean,
        cov,
        p_moment: pm / nf,
        mean_radius,
        target_mean,
        mean_error,
        scaled_excess,
        cov_deviation,
        cov_radius,
        epsilon_compatible,
        exact: model.support(x).map(|s| ExactMoments::from_support(&s, p)),
        flag,
    }
}
