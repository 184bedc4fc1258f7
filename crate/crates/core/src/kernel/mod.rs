//! Transition kernels on the wedge and an empirical auditor for their moments.

mod audit;
mod continuous;
mod lattice;
pub mod qp;

pub use audit::{moment_audit, probe_states, AuditConfig, AuditFlag, ExactMoments, MomentAudit, StateAudit};
pub use continuous::ContinuousModel;
pub use lattice::{lattice_interior_support, LatticeModel};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{check_alpha, Point, Region, Side};
use crate::lyapunov::DriftSetting;
use crate::{Covariance64, Geometry64, Point64};

/// Random stream owned by one trajectory or one sampling task.
pub type WalkRng = rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser, used to derive independent stream seeds from counters.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream number `index` under `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> WalkRng {
    WalkRng::seed_from_u64(seed)
}

/// Reflection data under the opposed convention `α⁺ = −α⁻ = α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSpec {
    pub alpha: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

impl ReflectionSpec {
    pub fn new(alpha: f64, mu_plus: f64, mu_minus: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(mu_plus > 0.0 && mu_minus > 0.0 && mu_plus.is_finite() && mu_minus.is_finite()) {
            return Err(invalid("mu", "mu_plus and mu_minus must be positive and finite"));
        }
        Ok(ReflectionSpec { alpha, mu_plus, mu_minus })
    }

    pub fn mu(&self, side: Side) -> f64 {
        match side {
            Side::Upper => self.mu_plus,
            Side::Lower => self.mu_minus,
        }
    }
}

/// Moment structure a model promises: interior covariance, boundary drift, and
/// the order `p` of the bounded moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Declared {
    pub cov: Covariance64,
    pub reflection: ReflectionSpec,
    pub moment_p: f64,
}

impl Declared {
    pub fn drift_setting(&self, geom: &Geometry64) -> DriftSetting<f64> {
        let mut s = DriftSetting::new(
            *geom,
            self.cov,
            self.reflection.alpha,
            self.reflection.mu_plus,
            self.reflection.mu_minus,
        )
        .expect("declared reflection already validated");
        s.moment_p = self.moment_p;
        s
    }
}

/// A time-homogeneous transition kernel on a subset of the wedge.
pub trait IncrementModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn geometry(&self) -> &Geometry64;

    fn declared(&self) -> &Declared;

    fn region(&self, x: Point64) -> Region;

    fn contains(&self, x: Point64) -> bool {
        self.geometry().contains(x)
    }

    /// One increment `Δ` drawn from the law at `x`.
    fn sample_increment(&self, x: Point64, region: Region, rng: &mut WalkRng) -> Point64;

    /// Next state `x + Δ`.
    fn sample(&self, x: Point64, region: Region, rng: &mut WalkRng) -> Point64 {
        x + self.sample_increment(x, region, rng)
    }

    fn step(&self, x: Point64, rng: &mut WalkRng) -> Point64 {
        self.sample(x, self.region(x), rng)
    }

    /// Whether `Δ` and `−Δ` have the same law at `x`, so antithetic pairs are valid.
    fn is_symmetric(&self, x: Point64, region: Region) -> bool;

    /// Exact finite law of `Δ` at `x`, when the model has one.
    fn support(&self, _x: Point64) -> Option<Vec<(Point64, f64)>> {
        None
    }

    /// Target boundary mean at `x`, or zero in the interior.
    fn target_mean(&self, x: Point64, region: Region) -> Point64 {
        match region.side() {
            Some(side) => {
                let refl = &self.declared().reflection;
                boundary_direction(self.geometry(), x, side, refl.alpha) * refl.mu(side)
            }
            None => Point::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Lattice,
    Continuous,
}

/// Which kernel to build; `jump_scale` is used by the continuous family only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub jump_scale: f64,
    /// Declared moment order `p > 2`; bounded jumps have every moment.
    pub moment_p: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            family: ModelFamily::Lattice,
            jump_scale: 0.5,
            moment_p: 4.0,
        }
    }
}

pub fn build_model(
    geom: Geometry64,
    refl: ReflectionSpec,
    cov: Covariance64,
    spec: &ModelSpec,
) -> Result<Box<dyn IncrementModel>> {
    if !(spec.moment_p > 2.0 && spec.moment_p.is_finite()) {
        return Err(invalid("moment_p", format!("declared moment order must exceed 2, got {}", spec.moment_p)));
    }
    Ok(match spec.family {
        ModelFamily::Lattice => Box::new(LatticeModel::new(geom, refl, cov)?.with_moment_p(spec.moment_p)),
        ModelFamily::Continuous => {
            Box::new(ContinuousModel::new(geom, refl, cov, spec.jump_scale)?.with_moment_p(spec.moment_p))
        }
    })
}

/// Unit direction of the boundary drift at `x`.
///
/// Inside the band of the wall `x1 = 0` (that is `x1 <= B`) and no farther from
/// the wall than from the curve on its own side, the walk is pushed along `e₁`;
/// everywhere else it is the reflection vector of that side.
pub fn boundary_direction(geom: &Geometry64, x: Point64, side: Side, alpha: f64) -> Point64 {
    if x.x1 <= geom.band_width() && x.x1 <= geom.curve_distance(x, side) {
        return Point::new(1.0, 0.0);
    }
    geom.reflection_vector(x.x1, side, alpha)
        .expect("x1 > 0 and alpha validated")
}

/// Wraps a model and shifts every interior increment by a constant vector.
/// Exists to check that the auditor notices broken zero-drift assumptions.
pub struct InteriorBias<M> {
    pub inner: M,
    pub bias: Point64,
}

impl<M: IncrementModel> IncrementModel for InteriorBias<M> {
    fn name(&self) -> &'static str {
        "interior_bias"
    }
    fn geometry(&self) -> &Geometry64 {
        self.inner.geometry()
    }
    fn declared(&self) -> &Declared {
        self.inner.declared()
    }
    fn region(&self, x: Point64) -> Region {
        self.inner.region(x)
    }
    fn sample_increment(&self, x: Point64, region: Region, rng: &mut WalkRng) -> Point64 {
        let d = self.inner.sample_increment(x, region, rng);
        if region == Region::Interior {
            d + self.bias
        } else {
            d
        }
    }
    fn is_symmetric(&self, _x: Point64, _region: Region) -> bool {
        false
    }
    fn support(&self, x: Point64) -> Option<Vec<(Point64, f64)>> {
        let region = self.inner.region(x);
        self.inner.support(x).map(|s| {
            s.into_iter()
                .map(|(d, p)| (if region == Region::Interior { d + self.bias } else { d }, p))
                .collect()
        })
    }
}
