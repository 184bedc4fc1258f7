//! Off-lattice kernel: four-point interior law and a drifted, tangentially
//! smeared boundary law.

use rand::Rng;

use super::{boundary_direction, Declared, IncrementModel, ReflectionSpec, WalkRng};
use crate::error::{invalid, Result, WedgeError};
use crate::geometry::{Point, Region};
use crate::spectral::Mat2;
use crate::{Covariance64, Geometry64, Point64};

const UNIT_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

pub struct ContinuousModel {
    geom: Geometry64,
    declared: Declared,
    jump_scale: f64,
    mu: ReflectionSpec,
    /// `jump_scale · Σ^{1/2}`.
    root: Mat2<f64>,
}

impl ContinuousModel {
    /// Interior increments have covariance `jump_scale² Σ` and boundary increments
    /// mean `μ^± jump_scale` along the reflection direction; these scaled values
    /// are what [`IncrementModel::declared`] reports.
    pub fn new(geom: Geometry64, refl: ReflectionSpec, cov: Covariance64, jump_scale: f64) -> Result<Self> {
        if !(jump_scale > 0.0 && jump_scale.is_finite()) {
            return Err(invalid("jump_scale", "must be positive and finite"));
        }
        if jump_scale > geom.band_width() / 4.0 {
            return Err(WedgeError::Construction(format!(
                "jump_scale {jump_scale} exceeds band_width/4 = {}",
                geom.band_width() / 4.0
            )));
        }
        let r = cov.sqrt_matrix();
        let root = Mat2::new(
            jump_scale * r.m[0][0],
            jump_scale * r.m[0][1],
            jump_scale * r.m[1][0],
            jump_scale * r.m[1][1],
        );
        let longest = UNIT_SIGNS
            .iter()
            .map(|&(a, b)| root.apply(Point::new(a, b)).norm())
            .fold(0.0, f64::max);
        if longest > geom.band_width() {
            return Err(WedgeError::Construction(format!(
                "interior jump length {longest} exceeds band width {}; reduce jump_scale",
                geom.band_width()
            )));
        }
        let declared = Declared {
            cov: cov.scaled(jump_scale * jump_scale)?,
            reflection: ReflectionSpec::new(refl.alpha, refl.mu_plus * jump_scale, refl.mu_minus * jump_scale)?,
            moment_p: 4.0,
        };
        Ok(ContinuousModel {
            geom,
            declared,
            jump_scale,
            mu: refl,
            root,
        })
    }

    pub fn with_moment_p(mut self, p: f64) -> Self {
        self.declared.moment_p = p;
        self
    }

    pub fn jump_scale(&self) -> f64 {
        self.jump_scale
    }

    /// Longest `t ∈ [0, 1]` (to bisection accuracy) with `x + tΔ ∈ D`, applied to `Δ`.
    fn shorten(&self, x: Point64, d: Point64) -> Point64 {
        if self.geom.contains(x + d) {
            return d;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.geom.contains(x + d * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d * lo
    }
}

impl IncrementModel for ContinuousModel {
    fn name(&self) -> &'static str {
        "continuous"
    }

    fn geometry(&self) -> &Geometry64 {
        &self.geom
    }

    fn declared(&self) -> &Declared {
        &self.declared
    }

    fn region(&self, x: Point64) -> Region {
        self.geom.classify(x)
    }

    fn sample_increment(&self, x: Point64, region: Region, rng: &mut WalkRng) -> Point64 {
        match region.side() {
            None => {
                let (a, b) = UNIT_SIGNS[rng.gen_range(0..4)];
                self.root.apply(Point::new(a, b))
            }
            Some(side) => {
                let dir = boundary_direction(&self.geom, x, side, self.mu.alpha);
                let tangent = if dir.x2 == 0.0 && dir.x1 == 1.0 {
                    Point::new(0.0, 1.0)
                } else {
                    self.geom
                        .inward_normal(x.x1, side)
                        .expect("boundary state has x1 > 0")
                        .perp()
                };
                let u: f64 = rng.gen_range(-0.5..0.5);
                let d = dir * (self.mu.mu(side) * self.jump_scale) + tangent * (u * self.jump_scale);
                self.shorten(x, d)
            }
        }
    }

    fn is_symmetric(&self, _x: Point64, region: Region) -> bool {
        region == Region::Interior
    }

    fn support(&self, x: Point64) -> Option<Vec<(Point64, f64)>> {
        if self.region(x) != Region::Interior {
            return None;
        }
        Some(
            UNIT_SIGNS
                .iter()
                .map(|&(a, b)| (self.root.apply(Point::new(a, b)), 0.25))
                .collect(),
        )
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;
    use crate::kernel::rng_from_seed;

    fn model(beta: f64, alpha: f64, cov: Covariance64, js: f64) -> ContinuousModel {
        let geom = Geometry64::symmetric(10.0, beta, 3.0).unwrap();
        ContinuousModel::new(geom, ReflectionSpec::new(alpha, 1.0, 1.0).unwrap(), cov, js).unwrap()
    }

    #[test]
    fn rejects_large_jump_scale() {
        let geom = Geometry64::symmetric(10.0, 0.5, 3.0).unwrap();
        let refl = ReflectionSpec::new(0.0, 1.0, 1.0).unwrap();
        assert!(ContinuousModel::new(geom, refl, Covariance64::identity(), 0.8).is_err());
        assert!(ContinuousModel::new(geom, refl, Covariance64::identity(), 0.75).is_ok());
    }

    #[test]
    fn interior_support_has_declared_covariance() {
        let m = model(0.5, 0.0, Covariance64::new(2.0, 1.0, 0.7).unwrap(), 0.5);
        let s = m.support(Point::new(1000.0, 0.0)).unwrap();
        let (mut mean, mut c) = (Point::new(0.0, 0.0), [0.0; 3]);
        for (v, p) in &s {
            mean = mean + *v * *p;
            c[0] += p * v.x1 * v.x1;
            c[1] += p * v.x2 * v.x2;
            c[2] += p * v.x1 * v.x2;
        }
        let d = m.declared().cov;
        assert!(mean.norm() < 1e-15);
        assert!((c[0] - d.sigma1_sq()).abs() < 1e-12);
        assert!((c[1] - d.sigma2_sq()).abs() < 1e-12);
        assert!((c[2] - d.rho()).abs() < 1e-12);
        assert!((d.sigma1_sq() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interior_mean_is_zero_by_monte_carlo() {
        let m = model(0.5, 0.0, Covariance64::identity(), 0.5);
        let x = Point::new(1000.0, 3.0);
        let mut rng = rng_from_seed(3);
        let n = 1_000_000;
        let mut s = Point::new(0.0, 0.0);
        for _ in 0..n {
            s = s + m.sample_increment(x, Region::Interior, &mut rng);
        }
        let mean = s * (1.0 / n as f64);
        let se = 0.5 / (n as f64).sqrt();
        assert!(mean.x1.abs() < 3.0 * se && mean.x2.abs() < 3.0 * se, "{mean:?}");
    }

    #[test]
    fn flat_boundary_never_shortens() {
        let m = model(0.0, 0.3, Covariance64::identity(), 0.5);
        let x = Point::new(500.0, 9.5);
        assert_eq!(m.region(x), Region::BoundaryUpper);
        let mut rng = rng_from_seed(5);
        let target = m.target_mean(x, Region::BoundaryUpper);
        let normal = m.geom.inward_normal(x.x1, Side::Upper).unwrap();
        for _ in 0..10_000 {
            let d = m.sample_increment(x, Region::BoundaryUpper, &mut rng);
            // Drift plus noise along the boundary only.
            assert!(((d - target).dot(normal)).abs() < 1e-12);
        }
    }

    #[test]
    fn containment_from_random_states() {
        use rand::Rng;
        let mut rng = rng_from_seed(9);
        for (beta, alpha) in [(0.5, 0.0), (2.0, 0.7), (0.0, -0.5), (1.0, 1.2)] {
            let m = model(beta, alpha, Covariance64::new(1.0, 4.0, 0.5).unwrap(), 0.3);
            for _ in 0..200_000 {
                let x1: f64 = rng.gen_range(0.0..200.0);
                let h = m.geom.height(x1, Side::Upper);
                let x = Point::new(x1, rng.gen_range(-h..=h));
                let y = m.step(x, &mut rng);
                assert!(m.geom.contains(y), "beta={beta} {x:?} -> {y:?}");
            }
        }
    }
}
