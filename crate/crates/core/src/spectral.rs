//! Covariance normalisation, the reflection angles derived from it, and the
//! critical threshold `β_c(Σ, α)` with its extrema over `α`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WedgeError};
use crate::geometry::{check_alpha, Point};
use crate::scalar::Scalar;

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2<S> {
    pub m: [[S; 2]; 2],
}

impl<S: Scalar> Mat2<S> {
    pub fn new(m11: S, m12: S, m21: S, m22: S) -> Self {
        Mat2 { m: [[m11, m12], [m21, m22]] }
    }

    pub fn identity() -> Self {
        Self::new(S::one(), S::zero(), S::zero(), S::one())
    }

    #[inline]
    pub fn apply(&self, p: Point<S>) -> Point<S> {
        Point::new(
            self.m[0][0] * p.x1 + self.m[0][1] * p.x2,
            self.m[1][0] * p.x1 + self.m[1][1] * p.x2,
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = [[S::zero(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: out }
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn max_abs_diff(&self, o: &Self) -> S {
        let mut d = S::zero();
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    /// Spectral norm of a symmetric matrix.
    pub fn sym_op_norm(&self) -> S {
        let (a, b, c) = (self.m[0][0], self.m[0][1], self.m[1][1]);
        let mid = (a + c) / S::lit(2.0);
        let rad = ((a - c) / S::lit(2.0)).hypot(b);
        (mid + rad).abs().max((mid - rad).abs())
    }
}

/// Interior covariance `Σ = (σ₁², ρ; ρ, σ₂²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec<S> {
    sigma1_sq: S,
    sigma2_sq: S,
    rho: S,
}

impl<S: Scalar> CovarianceSpec<S> {
    pub fn new(sigma1_sq: S, sigma2_sq: S, rho: S) -> Result<Self> {
        if !(sigma1_sq > S::zero() && sigma1_sq.is_finite()) {
            return Err(invalid("sigma1_sq", format!("must be positive, got {sigma1_sq}")));
        }
        if !(sigma2_sq > S::zero() && sigma2_sq.is_finite()) {
            return Err(invalid("sigma2_sq", format!("must be positive, got {sigma2_sq}")));
        }
        if !(rho.is_finite() && rho * rho < sigma1_sq * sigma2_sq) {
            return Err(invalid(
                "rho",
                format!("need rho^2 < sigma1_sq * sigma2_sq for positive definiteness, got rho = {rho}"),
            ));
        }
        Ok(CovarianceSpec { sigma1_sq, sigma2_sq, rho })
    }

    pub fn identity() -> Self {
        CovarianceSpec {
            sigma1_sq: S::one(),
            sigma2_sq: S::one(),
            rho: S::zero(),
        }
    }

    pub fn sigma1_sq(&self) -> S {
        self.sigma1_sq
    }
    pub fn sigma2_sq(&self) -> S {
        self.sigma2_sq
    }
    pub fn rho(&self) -> S {
        self.rho
    }

    /// `s = √(σ₁²σ₂² − ρ²)`.
    pub fn s(&self) -> S {
        (self.sigma1_sq * self.sigma2_sq - self.rho * self.rho).sqrt()
    }

    pub fn matrix(&self) -> Mat2<S> {
        Mat2::new(self.sigma1_sq, self.rho, self.rho, self.sigma2_sq)
    }

    /// Same matrix scaled by `k`.
    pub fn scaled(&self, k: S) -> Result<Self> {
        Self::new(self.sigma1_sq * k, self.sigma2_sq * k, self.rho * k)
    }

    /// Symmetric positive-definite square root of `Σ`.
    pub fn sqrt_matrix(&self) -> Mat2<S> {
        // For 2×2 SPD matrices, √Σ = (Σ + √det I) / √(tr Σ + 2√det).
        let sdet = self.s();
        let t = (self.sigma1_sq + self.sigma2_sq + S::lit(2.0) * sdet).sqrt();
        Mat2::new(
            (self.sigma1_sq + sdet) / t,
            self.rho / t,
            self.rho / t,
            (self.sigma2_sq + sdet) / t,
        )
    }
}

/// The upper-triangular `T` with `T Σ Tᵀ = I` that fixes the horizontal direction.
pub fn transform_matrix<S: Scalar>(cov: &CovarianceSpec<S>) -> Mat2<S> {
    let s = cov.s();
    let sigma2 = cov.sigma2_sq.sqrt();
    Mat2::new(sigma2 / s, -cov.rho / (s * sigma2), S::zero(), S::one() / sigma2)
}

/// Critical curve exponent `β_c(Σ, α)`, defined for `|α| <= π/2`.
pub fn beta_c<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S) -> Result<S> {
    if alpha.abs() > S::FRAC_PI_2() {
        return Err(WedgeError::Domain(format!("beta_c needs |alpha| <= pi/2, got {alpha}")));
    }
    Ok(beta_c_unchecked(cov, alpha))
}

#[inline]
pub(crate) fn beta_c_unchecked<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S) -> S {
    let (s1, s2, rho) = (cov.sigma1_sq, cov.sigma2_sq, cov.rho);
    let sa = alpha.sin();
    s1 / s2 + (s2 - s1) / s2 * sa * sa + rho / s2 * (S::lit(2.0) * alpha).sin()
}

/// Tail exponent `s₀ = (1 − β/β_c)/2`.
pub fn s0<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S, beta: S) -> Result<S> {
    if beta < S::zero() {
        return Err(invalid("beta", format!("must be nonnegative, got {beta}")));
    }
    let bc = beta_c(cov, alpha)?;
    Ok((S::one() - beta / bc) / S::lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedAngles<S> {
    pub theta1: S,
    pub theta2: S,
    pub theta3: S,
    pub d: S,
    pub eta0: S,
    pub eta1: S,
}

pub fn derived_angles<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S) -> Result<DerivedAngles<S>> {
    check_alpha(alpha)?;
    let (s1, s2, rho) = (cov.sigma1_sq, cov.sigma2_sq, cov.rho);
    let s = cov.s();
    let sigma2 = s2.sqrt();
    let (sa, ca) = alpha.sin_cos();
    let ta = alpha.tan();
    let d = (s2 * ca * ca - S::lit(2.0) * rho * sa * ca + s1 * sa * sa).sqrt();
    let eta0 = (s2 * ta + rho) / s;
    let eta1 = (s1 * ta - rho) / s;
    Ok(DerivedAngles {
        theta1: eta0.atan(),
        theta2: (rho / s).atan(),
        theta3: (s * sa / (sigma2 * d)).atan2((s2 * ca - rho * sa) / (sigma2 * d)),
        d,
        eta0,
        eta1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcExtrema<S> {
    pub bc_min: S,
    pub bc_max: S,
    /// `None` when `β_c` is constant in `α`.
    pub argmin: Option<S>,
    pub argmax: Option<S>,
}

/// Minimum and maximum of `α ↦ β_c(Σ, α)` over `[-π/2, π/2]`.
pub fn bc_extrema<S: Scalar>(cov: &CovarianceSpec<S>) -> BcExtrema<S> {
    let (s1, s2, rho) = (cov.sigma1_sq, cov.sigma2_sq, cov.rho);
    let two = S::lit(2.0);
    let half = S::lit(0.5);
    if s1 == s2 && rho == S::zero() {
        return BcExtrema {
            bc_min: S::one(),
            bc_max: S::one(),
            argmin: None,
            argmax: None,
        };
    }
    let root = ((s1 - s2) * (s1 - s2) + S::lit(4.0) * rho * rho).sqrt();
    let bc_min = half + s1 / (two * s2) - root / (two * s2);
    let bc_max = half + s1 / (two * s2) + root / (two * s2);
    let quarter = S::FRAC_PI_4();
    let (argmin, argmax) = if s1 == s2 {
        // β_c = 1 + (ρ/σ₂²) sin 2α.
        if rho > S::zero() {
            (-quarter, quarter)
        } else {
            (quarter, -quarter)
        }
    } else if rho == S::zero() {
        // β_c = σ₁²/σ₂² + c sin²α with c = (σ₂² − σ₁²)/σ₂².
        if s2 > s1 {
            (S::zero(), S::FRAC_PI_2())
        } else {
            (S::FRAC_PI_2(), S::zero())
        }
    } else {
        // β_c = σ₁²/σ₂² + c φ(α) with φ as in `phi_stationary`.
        let b = rho / (s2 - s1);
        let st = phi_stationary(b).expect("b is nonzero here");
        if s2 > s1 {
            (st.alpha0, st.alpha1)
        } else {
            (st.alpha1, st.alpha0)
        }
    };
    BcExtrema {
        bc_min,
        bc_max,
        argmin: Some(argmin),
        argmax: Some(argmax),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiStationary<S> {
    pub alpha0: S,
    pub phi_min: S,
    pub alpha1: S,
    pub phi_max: S,
}

/// Stationary points of `φ(α) = sin²α + b sin 2α` on `[-π/2, π/2]`.
pub fn phi_stationary<S: Scalar>(b: S) -> Result<PhiStationary<S>> {
    if b == S::zero() || !b.is_finite() {
        return Err(invalid("b", "phi_stationary needs a finite nonzero b"));
    }
    let two = S::lit(2.0);
    let alpha0 = (-two * b).atan() / two;
    let root = (S::one() + S::lit(4.0) * b * b).sqrt();
    let phi_min = (S::one() - root) / two;
    let alpha1 = if b > S::zero() {
        alpha0 + S::FRAC_PI_2()
    } else {
        alpha0 - S::FRAC_PI_2()
    };
    Ok(PhiStationary {
        alpha0,
        phi_min,
        alpha1,
        phi_max: S::one() - phi_min,
    })
}

pub fn phi<S: Scalar>(b: S, alpha: S) -> S {
    let sa = alpha.sin();
    sa * sa + b * (S::lit(2.0) * alpha).sin()
}

/// Everything the threshold analysis needs for one `(Σ, α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<S> {
    pub beta_c: S,
    pub s0: S,
    pub bc_min: S,
    pub bc_max: S,
}

pub fn thresholds<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S, beta: S) -> Result<Thresholds<S>> {
    let ext = bc_extrema(cov);
    Ok(Thresholds {
        beta_c: beta_c(cov, alpha)?,
        s0: s0(cov, alpha, beta)?,
        bc_min: ext.bc_min,
        bc_max: ext.bc_max,
    })
}
