use serde::Serialize;

use super::survival::SurvivalCurve;
use super::tail::tail_exponent;
use crate::error::{Result, WedgeError};

/// `RecurrentLike` needs the doubling drop to exceed this many radii.
pub const RECURRENT_RADII: f64 = 3.0;
pub const RECURRENT_MAX_SLOPE: f64 = -0.05;
pub const TRANSIENT_MIN_LEVEL: f64 = 0.1;
pub const TRANSIENT_MIN_SLOPE: f64 = -0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    RecurrentLike,
    TransientLike,
    Inconclusive,
}

impl VerdictKind {
    pub fn label(self) -> &'static str {
        match self {
            VerdictKind::RecurrentLike => "RecurrentLike",
            VerdictKind::TransientLike => "TransientLike",
            VerdictKind::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evidence {
    /// `Ŝ(T)` from the horizon-`T` curve.
    pub s_t: f64,
    /// `Ŝ(2T)` from the horizon-`2T` curve.
    pub s_2t: f64,
    /// `Ŝ(T) − Ŝ(2T)`.
    pub delta: f64,
    /// One-standard-error radius of `delta`.
    pub radius: f64,
    /// Log-log slope of the `2T` curve over its last decade.
    pub slope: f64,
    /// Whether the two curves come from the same walkers.
    pub paired: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub evidence: Evidence,
}

/// Horizon-doubling classification.
///
/// When both curves come from the same walkers (same seeds, the shorter run a
/// prefix of the longer) `delta` is the share of walkers returning in `(T, 2T]`
/// and its radius is the Wilson score half-width at one standard error.
/// Otherwise the runs are independent and the two binomial errors add in
/// quadrature.
pub fn classify(curve_t: &SurvivalCurve, curve_2t: &SurvivalCurve) -> Result<Verdict> {
    let t = curve_t.horizon;
    if curve_2t.horizon != 2 * t || curve_t.n != curve_2t.n {
        return Err(WedgeError::Precondition {
            lemma: "classify",
            constraint: format!(
                "curves must share n and have horizons T and 2T, got (n={}, T={}) and (n={}, T={})",
                curve_t.n, t, curve_2t.n, curve_2t.horizon
            ),
        });
    }
    let n = curve_t.n as f64;
    let s_t = curve_t.at(t);
    let s_2t = curve_2t.at(2 * t);
    let delta = s_t - s_2t;
    let paired = curve_t.points.iter().all(|p| curve_2t.at(p.t) == p.s_hat);
    let radius = if paired {
        let d = delta.max(0.0);
        (d * (1.0 - d) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
    } else {
        ((s_t * (1.0 - s_t) + s_2t * (1.0 - s_2t)) / n).sqrt()
    };
    let slope = last_decade_slope(curve_2t);
    let kind = if delta >= RECURRENT_RADII * radius && delta > 0.0 && slope <= RECURRENT_MAX_SLOPE {
        VerdictKind::RecurrentLike
    } else if delta.abs() <= radius && s_2t >= TRANSIENT_MIN_LEVEL && slope >= TRANSIENT_MIN_SLOPE {
        VerdictKind::TransientLike
    } else {
        VerdictKind::Inconclusive
    };
    Ok(Verdict {
        kind,
        evidence: Evidence {
            s_t,
            s_2t,
            delta,
            radius,
            slope,
            paired,
        },
    })
}

fn last_decade_slope(curve: &SurvivalCurve) -> f64 {
    let hi = curve.horizon;
    let lo = (hi / 10).max(1);
    if curve.at(hi) == 0.0 {
        return f64::NEG_INFINITY;
    }
    match tail_exponent(curve, (lo, hi)) {
        Ok(e) => -e.exponent_hat,
        Err(_) => ((curve.at(hi) / curve.at(lo)).ln()) / ((hi as f64 / lo as f64).ln()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::survival::{survival, synthetic};
    use rand::{Rng, SeedableRng};

    fn curves(taus: &[f64], t: u64) -> (SurvivalCurve, SurvivalCurve) {
        let long = survival(&synthetic(taus, 2 * t), 2 * t).unwrap();
        (long.truncated(t).unwrap(), long)
    }

    fn draws(n: usize, seed: u64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| f(rng.gen::<f64>())).collect()
    }

    #[test]
    fn heavy_power_law_is_recurrent_like() {
        let taus = draws(1000, 1, |u| 1e3 * u.powf(-1.0 / 0.3));
        let (a, b) = curves(&taus, 1_000_000);
        let v = classify(&a, &b).unwrap();
        assert!(v.evidence.paired);
        assert_eq!(v.kind, VerdictKind::RecurrentLike, "{v:?}");
    }

    #[test]
    fn plateau_is_transient_like() {
        let taus = draws(1000, 2, |u| if u < 0.4 { 1e3 * (u / 0.4).powf(-1.0) } else { f64::INFINITY });
        let (a, b) = curves(&taus, 1_000_000);
        let v = classify(&a, &b).unwrap();
        assert_eq!(v.kind, VerdictKind::TransientLike, "{v:?}");
    }

    #[test]
    fn low_plateau_is_inconclusive() {
        let taus = draws(1000, 3, |u| if u < 0.95 { 10.0 * (u / 0.95).powf(-1.0) } else { f64::INFINITY });
        let (a, b) = curves(&taus, 1_000_000);
        let v = classify(&a, &b).unwrap();
        assert!(v.evidence.s_2t < 0.1);
        assert_eq!(v.kind, VerdictKind::Inconclusive, "{v:?}");
    }

    #[test]
    fn independent_runs_use_quadrature() {
        let short = survival(&synthetic(&draws(1000, 4, |u| 1e2 / u), 1000), 1000).unwrap();
        let long = survival(&synthetic(&draws(1000, 5, |u| 1e2 / u), 2000), 2000).unwrap();
        let v = classify(&short, &long).unwrap();
        assert!(!v.evidence.paired);
        let (s1, s2) = (v.evidence.s_t, v.evidence.s_2t);
        assert!((v.evidence.radius - ((s1 * (1.0 - s1) + s2 * (1.0 - s2)) / 1000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_curves_are_rejected() {
        let a = survival(&synthetic(&[5.0, 9.0], 100), 100).unwrap();
        let b = survival(&synthetic(&[5.0, 9.0], 300), 300).unwrap();
        assert!(classify(&a, &b).is_err());
    }

    #[test]
    fn stronger_decay_never_turns_recurrent_into_transient() {
        // Move late survivors' return times into (T, 2T]: strictly more decay evidence.
        let t = 100_000u64;
        for seed in 0..20 {
            let mut taus = draws(1000, 100 + seed, |u| 50.0 * u.powf(-1.0 / 0.25));
            let before = classify(&curves(&taus, t).0, &curves(&taus, t).1).unwrap().kind;
            let mut moved = 0;
            for x in taus.iter_mut() {
                if *x > 2.0 * t as f64 && moved < 5 {
                    *x = 1.5 * t as f64;
                    moved += 1;
                }
            }
            let (a, b) = curves(&taus, t);
            let after = classify(&a, &b).unwrap().kind;
            if before == VerdictKind::RecurrentLike {
                assert_eq!(after, VerdictKind::RecurrentLike, "seed {seed}");
            }
            assert!(!(before != VerdictKind::TransientLike && after == VerdictKind::TransientLike));
        }
    }
}
