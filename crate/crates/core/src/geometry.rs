//! The curvilinear wedge `x1 >= 0, -a⁻ x1^β⁻ <= x2 <= a⁺ x1^β⁺` and its boundary band.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WedgeError};
use crate::scalar::Scalar;

/// A point (or displacement) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<S> {
    pub x1: S,
    pub x2: S,
}

impl<S: Scalar> Point<S> {
    #[inline]
    pub fn new(x1: S, x2: S) -> Self {
        Point { x1, x2 }
    }

    pub fn from_polar(r: S, theta: S) -> Self {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    #[inline]
    pub fn norm(self) -> S {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    /// Polar angle in `(-π, π]`, anticlockwise from the positive `x1` axis.
    #[inline]
    pub fn theta(self) -> S {
        self.x2.atan2(self.x1)
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// Anticlockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Point::new(-self.x2, self.x1)
    }
}

impl<S: Scalar> Add for Point<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Point::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl<S: Scalar> Sub for Point<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Point::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl<S: Scalar> Neg for Point<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Point::new(-self.x1, -self.x2)
    }
}

impl<S: Scalar> Mul<S> for Point<S> {
    type Output = Self;
    #[inline]
    fn mul(self, k: S) -> Self {
        Point::new(self.x1 * k, self.x2 * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Interior,
    BoundaryUpper,
    BoundaryLower,
    Outside,
}

impl Region {
    pub fn side(self) -> Option<Side> {
        match self {
            Region::BoundaryUpper => Some(Side::Upper),
            Region::BoundaryLower => Some(Side::Lower),
            _ => None,
        }
    }

    pub fn is_boundary(self) -> bool {
        self.side().is_some()
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Interior => "interior",
            Region::BoundaryUpper => "boundary_upper",
            Region::BoundaryLower => "boundary_lower",
            Region::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    /// `+1` for the upper curve, `-1` for the lower one.
    #[inline]
    pub fn sign<S: Scalar>(self) -> S {
        match self {
            Side::Upper => S::one(),
            Side::Lower => -S::one(),
        }
    }

    pub fn boundary(self) -> Region {
        match self {
            Side::Upper => Region::BoundaryUpper,
            Side::Lower => Region::BoundaryLower,
        }
    }
}

/// Seeds for the bracketing grid of the distance minimisation.
const DISTANCE_SEEDS: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry<S> {
    a_plus: S,
    a_minus: S,
    beta_plus: S,
    beta_minus: S,
    band_width: S,
}

impl<S: Scalar> WedgeGeometry<S> {
    pub fn new(a_plus: S, a_minus: S, beta_plus: S, beta_minus: S, band_width: S) -> Result<Self> {
        let positive = |name, v: S| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        let nonneg = |name, v: S| {
            if v >= S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be nonnegative and finite, got {v}")))
            }
        };
        positive("a_plus", a_plus)?;
        positive("a_minus", a_minus)?;
        nonneg("beta_plus", beta_plus)?;
        nonneg("beta_minus", beta_minus)?;
        positive("band_width", band_width)?;
        Ok(WedgeGeometry {
            a_plus,
            a_minus,
            beta_plus,
            beta_minus,
            band_width,
        })
    }

    /// Same amplitude and exponent on both sides.
    pub fn symmetric(a: S, beta: S, band_width: S) -> Result<Self> {
        Self::new(a, a, beta, beta, band_width)
    }

    pub fn a_plus(&self) -> S {
        self.a_plus
    }
    pub fn a_minus(&self) -> S {
        self.a_minus
    }
    pub fn beta_plus(&self) -> S {
        self.beta_plus
    }
    pub fn beta_minus(&self) -> S {
        self.beta_minus
    }
    pub fn band_width(&self) -> S {
        self.band_width
    }

    /// `(a, β)` for one side.
    #[inline]
    pub fn side_params(&self, side: Side) -> (S, S) {
        match side {
            Side::Upper => (self.a_plus, self.beta_plus),
            Side::Lower => (self.a_minus, self.beta_minus),
        }
    }

    /// `a z^β`, or an error for negative `z`.
    pub fn boundary_height(&self, z: S, side: Side) -> Result<S> {
        if z < S::zero() || z.is_nan() {
            return Err(WedgeError::Domain(format!("boundary height needs z >= 0, got {z}")));
        }
        Ok(self.height(z, side))
    }

    #[inline]
    pub(crate) fn height(&self, z: S, side: Side) -> S {
        let (a, beta) = self.side_params(side);
        if beta == S::zero() {
            a
        } else if z == S::zero() {
            S::zero()
        } else {
            a * z.powf(beta)
        }
    }

    /// Derivative `a β z^(β-1)` of the boundary curve; infinite at the apex when `β < 1`.
    #[inline]
    pub fn slope(&self, z: S, side: Side) -> S {
        let (a, beta) = self.side_params(side);
        if beta == S::zero() {
            S::zero()
        } else if beta == S::one() {
            a
        } else if z == S::zero() {
            if beta < S::one() {
                S::infinity()
            } else {
                S::zero()
            }
        } else {
            a * beta * z.powf(beta - S::one())
        }
    }

    #[inline]
    pub fn contains(&self, p: Point<S>) -> bool {
        p.x1 >= S::zero()
            && p.x2 <= self.height(p.x1, Side::Upper)
            && -p.x2 <= self.height(p.x1, Side::Lower)
    }

    /// Distance from `p` to the closed curve on one side.
    pub fn curve_distance(&self, p: Point<S>, side: Side) -> S {
        let sign = side.sign::<S>();
        let obj = |z: S| {
            let dz = z - p.x1;
            let dy = sign * self.height(z, side) - p.x2;
            dz * dz + dy * dy
        };
        let hi = S::lit(2.0) * p.x1 + S::lit(10.0);
        let step = hi / S::lit((DISTANCE_SEEDS - 1) as f64);
        let mut best_i = 0;
        let mut best = obj(S::zero());
        for i in 1..DISTANCE_SEEDS {
            let v = obj(step * S::lit(i as f64));
            if v < best {
                best = v;
                best_i = i;
            }
        }
        let lo = step * S::lit(best_i.saturating_sub(1) as f64);
        let up = step * S::lit((best_i + 1).min(DISTANCE_SEEDS - 1) as f64);
        let (_, v) = golden_section(obj, lo, up, S::solver_tol());
        best.min(v).sqrt()
    }

    /// Euclidean distance from a point of `D` to the complement `ℝ² \ D`.
    pub fn distance_to_complement(&self, p: Point<S>) -> Result<S> {
        if !self.contains(p) {
            return Err(WedgeError::Domain(format!(
                "distance_to_complement needs a point of D, got ({}, {})",
                p.x1, p.x2
            )));
        }
        let up = self.curve_distance(p, Side::Upper);
        let low = self.curve_distance(p, Side::Lower);
        Ok(p.x1.min(up).min(low))
    }

    /// Lower bound on the distance to one curve that is cheap to evaluate.
    /// Valid whenever `p.x1 > B`; returns zero when it cannot certify anything.
    fn curve_distance_lower_bound(&self, p: Point<S>, side: Side) -> S {
        let b = self.band_width;
        let gap = self.height(p.x1, side) - side.sign::<S>() * p.x2;
        let (_, beta) = self.side_params(side);
        let l = if beta < S::one() {
            self.slope(p.x1 - b, side)
        } else {
            self.slope(p.x1 + b, side)
        };
        if !l.is_finite() {
            return S::zero();
        }
        gap / (S::one() + l * l).sqrt()
    }

    /// Whether `p` (assumed in `D`) is within the band width of the complement.
    fn in_band(&self, p: Point<S>) -> bool {
        let b = self.band_width;
        if p.x1 <= b {
            return true;
        }
        let gap_up = self.height(p.x1, Side::Upper) - p.x2;
        let gap_low = self.height(p.x1, Side::Lower) + p.x2;
        if gap_up <= b || gap_low <= b {
            return true;
        }
        let certain_up = self.curve_distance_lower_bound(p, Side::Upper) > b;
        let certain_low = self.curve_distance_lower_bound(p, Side::Lower) > b;
        if certain_up && certain_low {
            return false;
        }
        (!certain_up && self.curve_distance(p, Side::Upper) <= b)
            || (!certain_low && self.curve_distance(p, Side::Lower) <= b)
    }

    pub fn classify(&self, p: Point<S>) -> Region {
        if !self.contains(p) {
            Region::Outside
        } else if self.in_band(p) {
            if p.x2 >= S::zero() {
                Region::BoundaryUpper
            } else {
                Region::BoundaryLower
            }
        } else {
            Region::Interior
        }
    }

    pub fn inward_normal(&self, x1: S, side: Side) -> Result<Point<S>> {
        if !(x1 > S::zero()) {
            return Err(WedgeError::Domain(format!("normal undefined at x1 = {x1}")));
        }
        let k = self.slope(x1, side);
        let r = S::one().hypot(k);
        Ok(Point::new(k / r, -side.sign::<S>() / r))
    }

    /// Unit vector at angle `alpha` to the inward normal, rotated anticlockwise on
    /// both sides (`α⁺ = α`, `α⁻ = -α` with the lower angle measured clockwise).
    pub fn reflection_vector(&self, x1: S, side: Side, alpha: S) -> Result<Point<S>> {
        check_alpha(alpha)?;
        if !(x1 > S::zero()) {
            return Err(WedgeError::Domain(format!("reflection vector undefined at x1 = {x1}")));
        }
        let k = self.slope(x1, side);
        let sg = side.sign::<S>();
        let (sa, ca) = alpha.sin_cos();
        // Dividing through by k first keeps the steep (β > 1) case finite.
        if k > S::one() {
            let q = S::one() / k;
            let r = S::one().hypot(q);
            return Ok(Point::new(sg * sa * q + ca, -sg * ca * q + sa) * (S::one() / r));
        }
        let r = S::one().hypot(k);
        Ok(Point::new(sg * sa + k * ca, -sg * ca + k * sa) * (S::one() / r))
    }
}

pub(crate) fn check_alpha<S: Scalar>(alpha: S) -> Result<()> {
    if alpha.abs() < S::FRAC_PI_2() {
        Ok(())
    } else {
        Err(WedgeError::Domain(format!("reflection angle must satisfy |alpha| < pi/2, got {alpha}")))
    }
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`. Returns `(argmin, min)`.
pub(crate) fn golden_section<S: Scalar, F: Fn(S) -> S>(f: F, mut lo: S, mut hi: S, tol: S) -> (S, S) {
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (hi - lo) > tol && iters < 400 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        iters += 1;
    }
    let (mut arg, mut best) = if fc < fd { (c, fc) } else { (d, fd) };
    for z in [lo, hi] {
        let v = f(z);
        if v < best {
            best = v;
            arg = z;
        }
    }
    (arg, best)
}
