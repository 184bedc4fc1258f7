//! Lyapunov function families on the wedge and the leading-order drift each one
//! is expected to have in the interior and on the two boundary bands.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WedgeError};
use crate::geometry::{check_alpha, Point, Region, Side, WedgeGeometry};
use crate::scalar::Scalar;
use crate::spectral::{beta_c_unchecked, derived_angles, transform_matrix, CovarianceSpec, DerivedAngles, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionKind {
    Hw,
    FwGamma,
    FBig,
    HLog,
    Ell,
    GGamma,
    WGamma,
}

impl FunctionKind {
    pub fn label(self) -> &'static str {
        match self {
            FunctionKind::Hw => "h_w",
            FunctionKind::FwGamma => "f_w_gamma",
            FunctionKind::FBig => "F_w_gamma_nu",
            FunctionKind::HLog => "h_log",
            FunctionKind::Ell => "ell",
            FunctionKind::GGamma => "g_gamma",
            FunctionKind::WGamma => "w_gamma",
        }
    }
}

impl std::str::FromStr for FunctionKind {
    type Err = WedgeError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "h_w" | "Hw" => FunctionKind::Hw,
            "f_w_gamma" | "FwGamma" => FunctionKind::FwGamma,
            "F_w_gamma_nu" | "FBig" => FunctionKind::FBig,
            "h_log" | "HLog" => FunctionKind::HLog,
            "ell" | "Ell" => FunctionKind::Ell,
            "g_gamma" | "GGamma" => FunctionKind::GGamma,
            "w_gamma" | "WGamma" => FunctionKind::WGamma,
            other => return Err(invalid("kind", format!("unknown function kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams<S> {
    pub w: S,
    pub gamma: S,
    pub theta0: S,
    pub lambda: S,
    pub nu: S,
    pub eta: S,
}

impl<S: Scalar> Default for LyapunovParams<S> {
    fn default() -> Self {
        LyapunovParams {
            w: S::one(),
            gamma: S::one(),
            theta0: S::zero(),
            lambda: S::zero(),
            nu: S::zero(),
            eta: S::zero(),
        }
    }
}

/// Model data the drift predictions depend on: the wedge, the interior covariance,
/// the reflection angle `α` (opposed convention), drift magnitudes `μ±` and the
/// moment order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSetting<S> {
    pub geom: WedgeGeometry<S>,
    pub cov: CovarianceSpec<S>,
    pub alpha: S,
    pub mu_plus: S,
    pub mu_minus: S,
    pub moment_p: S,
}

impl<S: Scalar> DriftSetting<S> {
    pub fn new(geom: WedgeGeometry<S>, cov: CovarianceSpec<S>, alpha: S, mu_plus: S, mu_minus: S) -> Result<Self> {
        check_alpha(alpha)?;
        if !(mu_plus > S::zero() && mu_minus > S::zero()) {
            return Err(invalid("mu", "boundary drift magnitudes must be positive"));
        }
        Ok(DriftSetting {
            geom,
            cov,
            alpha,
            mu_plus,
            mu_minus,
            moment_p: S::lit(4.0),
        })
    }

    pub fn mu(&self, side: Side) -> S {
        match side {
            Side::Upper => self.mu_plus,
            Side::Lower => self.mu_minus,
        }
    }

    pub fn angles(&self) -> DerivedAngles<S> {
        derived_angles(&self.cov, self.alpha).expect("alpha validated on construction")
    }

    pub fn beta_c(&self) -> S {
        beta_c_unchecked(&self.cov, self.alpha)
    }

    pub fn transform(&self) -> Mat2<S> {
        transform_matrix(&self.cov)
    }
}

/// `r^w cos(wθ − θ₀)`.
pub fn h_w<S: Scalar>(p: Point<S>, w: S, theta0: S) -> Result<S> {
    let r = p.norm();
    if r == S::zero() {
        if w < S::zero() {
            return Err(WedgeError::Domain("h_w with w < 0 is undefined at the origin".into()));
        }
        return Ok(if w == S::zero() { theta0.cos() } else { S::zero() });
    }
    Ok(r.powf(w) * (w * p.theta() - theta0).cos())
}

/// Gradient of `h_w`: `w r^(w−1) (cos((w−1)θ − θ₀), −sin((w−1)θ − θ₀))`.
pub fn grad_h_w<S: Scalar>(p: Point<S>, w: S, theta0: S) -> Result<Point<S>> {
    let r = p.norm();
    if r == S::zero() {
        return Err(WedgeError::Domain("gradient of h_w undefined at the origin".into()));
    }
    let phase = (w - S::one()) * p.theta() - theta0;
    let k = w * r.powf(w - S::one());
    Ok(Point::new(k * phase.cos(), -k * phase.sin()))
}

/// Hessian of `h_w` as `(∂₁₁, ∂₁₂, ∂₂₂)`.
pub fn hessian_h_w<S: Scalar>(p: Point<S>, w: S, theta0: S) -> Result<(S, S, S)> {
    let r = p.norm();
    if r == S::zero() {
        return Err(WedgeError::Domain("Hessian of h_w undefined at the origin".into()));
    }
    let two = S::lit(2.0);
    let phase = (w - two) * p.theta() - theta0;
    let k = w * (w - S::one()) * r.powf(w - two);
    let (c, s) = (k * phase.cos(), k * phase.sin());
    Ok((c, -s, -c))
}

/// `log r + ηθ`, the harmonic function behind `ℓ`.
pub fn h_log<S: Scalar>(p: Point<S>, eta: S) -> Result<S> {
    let r = p.norm();
    if r == S::zero() {
        return Err(WedgeError::Domain("log r undefined at the origin".into()));
    }
    Ok(r.ln() + eta * p.theta())
}

pub fn grad_h_log<S: Scalar>(p: Point<S>, eta: S) -> Result<Point<S>> {
    let r2 = p.norm_sq();
    if r2 == S::zero() {
        return Err(WedgeError::Domain("gradient of log r undefined at the origin".into()));
    }
    Ok(Point::new((p.x1 - eta * p.x2) / r2, (p.x2 + eta * p.x1) / r2))
}

/// `max(1, log y)`, with nonpositive `y` mapped to `1`.
#[inline]
fn clamped_log<S: Scalar>(y: S) -> S {
    if y <= S::zero() {
        S::one()
    } else {
        y.ln().max(S::one())
    }
}

/// `ℓ(x) = log h(Tx)` with the clamped logarithm at both levels.
pub fn ell<S: Scalar>(p: Point<S>, eta: S, t: &Mat2<S>) -> S {
    let q = t.apply(p);
    let r = q.norm();
    let inner = clamped_log(r) + if r == S::zero() { S::zero() } else { eta * q.theta() };
    clamped_log(inner)
}

/// Radius `exp(e + |η|π)` beyond which `ℓ` is smooth on the whole wedge.
pub fn ell_smooth_radius<S: Scalar>(eta: S) -> S {
    (S::E() + eta.abs() * S::PI()).exp()
}

/// Value of the chosen function at `p`.
pub fn evaluate<S: Scalar>(
    kind: FunctionKind,
    p: Point<S>,
    params: &LyapunovParams<S>,
    setting: &DriftSetting<S>,
) -> Result<S> {
    let t = setting.transform();
    match kind {
        FunctionKind::Hw => h_w(p, params.w, params.theta0),
        FunctionKind::FwGamma => f_w_gamma(p, params, &t),
        FunctionKind::FBig => {
            let f = f_w_gamma(p, params, &t)?;
            let tn = t.apply(p).norm();
            Ok(f + params.lambda * p.x2 * tn.powf(S::lit(2.0) * params.nu))
        }
        FunctionKind::HLog => h_log(t.apply(p), params.eta),
        FunctionKind::Ell => Ok(ell(p, params.eta, &t)),
        FunctionKind::GGamma => {
            let eta0 = setting.angles().eta0;
            let th = p.theta();
            Ok(ell(p, eta0, &t) + th * th / (S::one() + p.norm()).powf(params.gamma))
        }
        FunctionKind::WGamma => {
            let eta1 = setting.angles().eta1;
            Ok(ell(p, eta1, &t) - p.x1 / (S::one() + p.norm_sq()).powf(params.gamma))
        }
    }
}

fn f_w_gamma<S: Scalar>(p: Point<S>, params: &LyapunovParams<S>, t: &Mat2<S>) -> Result<S> {
    let q = t.apply(p);
    let h = h_w(q, params.w, params.theta0)?;
    let gamma = params.gamma;
    if h < S::zero() && gamma.fract() != S::zero() {
        return Err(undefined(p, "h_w(Tx) < 0 under a non-integer power"));
    }
    if h == S::zero() && gamma < S::zero() {
        return Err(undefined(p, "h_w(Tx) = 0 under a negative power"));
    }
    Ok(if gamma == S::one() { h } else { h.powf(gamma) })
}

fn undefined<S: Scalar>(p: Point<S>, reason: &str) -> WedgeError {
    WedgeError::Undefined {
        x1: p.x1.to_f64().unwrap_or(f64::NAN),
        x2: p.x2.to_f64().unwrap_or(f64::NAN),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftPrediction<S> {
    pub value: S,
    pub order: S,
    pub regime: Region,
}

fn precondition(lemma: &'static str, constraint: impl Into<String>) -> WedgeError {
    WedgeError::Precondition {
        lemma,
        constraint: constraint.into(),
    }
}

const F_LEMMA: &str = "f_w^gamma drift lemma";
const BIG_F_LEMMA: &str = "F_w^{gamma,nu} drift lemma";
const ELL_LEMMA: &str = "ell drift lemma";
const G_LEMMA: &str = "g_gamma drift lemma";
const W_LEMMA: &str = "w_gamma drift lemma";

/// `θ₀` that the boundary estimate for `f_w^γ` on `side` is stated for.
pub fn lemma_theta0<S: Scalar>(setting: &DriftSetting<S>, w: S, side: Side) -> Result<S> {
    let (_, beta) = setting.geom.side_params(side);
    let ang = setting.angles();
    if beta < S::one() {
        Ok(ang.theta1)
    } else if beta > S::one() {
        Ok(ang.theta3 - (S::one() - w) * ang.theta2)
    } else {
        Err(precondition(F_LEMMA, "beta = 1 is not covered"))
    }
}

/// `η` that the boundary estimate for `ℓ` on `side` is stated for.
pub fn lemma_eta<S: Scalar>(setting: &DriftSetting<S>, side: Side) -> Result<S> {
    let (_, beta) = setting.geom.side_params(side);
    let ang = setting.angles();
    if beta < S::one() {
        Ok(ang.eta0)
    } else if beta > S::one() {
        Ok(ang.eta1)
    } else {
        Err(precondition(ELL_LEMMA, "beta = 1 is not covered"))
    }
}

fn big_beta_theta0_ok<S: Scalar>(w: S, theta0: S) -> bool {
    w * S::FRAC_PI_2() + theta0.abs() < S::FRAC_PI_2()
}

/// Largest `w ∈ (0, 1/2)` for which `θ₀ = θ₃ − (1−w)θ₂` satisfies
/// `sup_{|θ|≤π/2} |wθ − θ₀| < π/2`. `None` if no grid point qualifies.
pub fn max_admissible_w<S: Scalar>(cov: &CovarianceSpec<S>, alpha: S) -> Result<Option<S>> {
    let ang = derived_angles(cov, alpha)?;
    let ok = |w: S| big_beta_theta0_ok(w, ang.theta3 - (S::one() - w) * ang.theta2);
    let n = 1000;
    let half = S::lit(0.5);
    let mut best: Option<usize> = None;
    for i in (1..n).rev() {
        if ok(half * S::lit(i as f64 / n as f64)) {
            best = Some(i);
            break;
        }
    }
    let Some(i) = best else { return Ok(None) };
    let (mut lo, mut hi) = (half * S::lit(i as f64 / n as f64), half * S::lit((i + 1) as f64 / n as f64));
    if i + 1 == n {
        return Ok(Some(lo.max(half * S::lit(0.999))));
    }
    for _ in 0..60 {
        let mid = (lo + hi) / S::lit(2.0);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

fn close<S: Scalar>(a: S, b: S) -> bool {
    (a - b).abs() <= S::lit(1e-9).max(S::epsilon() * S::lit(16.0)) * (S::one() + b.abs())
}

/// Leading term of `E_x[f(ξ₁) − f(x)]` for the chosen function at `p`.
pub fn predicted_drift<S: Scalar>(
    kind: FunctionKind,
    p: Point<S>,
    region: Region,
    params: &LyapunovParams<S>,
    setting: &DriftSetting<S>,
) -> Result<DriftPrediction<S>> {
    let two = S::lit(2.0);
    let geom = &setting.geom;
    let cov = &setting.cov;
    let pm = setting.moment_p;
    let t = setting.transform();
    let q = t.apply(p);
    let tn = q.norm();
    let xn = p.norm();
    let s = cov.s();
    let alpha = setting.alpha;
    let (w, gamma) = (params.w, params.gamma);
    if region == Region::Outside {
        return Err(WedgeError::Domain("no drift prediction outside the wedge".into()));
    }
    if !(xn > S::zero()) {
        return Err(WedgeError::Domain("drift predictions need x != 0".into()));
    }
    let out = |value: S, order: S| {
        Ok(DriftPrediction {
            value,
            order,
            regime: region,
        })
    };
    let side = region.side();
    if side.is_some() && !(p.x1 > S::zero()) {
        return Err(WedgeError::Domain("boundary drift predictions need x1 > 0".into()));
    }

    match kind {
        FunctionKind::Hw | FunctionKind::HLog => Err(precondition(
            "drift prediction",
            format!("no drift estimate is stated for {}; use the composed functions", kind.label()),
        )),
        FunctionKind::FwGamma | FunctionKind::FBig => {
            let gw = gamma * w;
            if !(two - pm < gw && gw < pm) {
                return Err(precondition(F_LEMMA, format!("need 2 - p < gamma*w < p, got gamma*w = {gw}")));
            }
            if !(params.theta0.abs() < S::FRAC_PI_2()) {
                return Err(precondition(F_LEMMA, "need |theta0| < pi/2"));
            }
            let h = h_w(q, w, params.theta0)?;
            if !(h > S::zero()) {
                return Err(undefined(p, "h_w(Tx) must be positive for the drift estimate"));
            }
            let big_side = if kind == FunctionKind::FBig { Some(check_big_f(params, setting)?) } else { None };
            match side {
                None => {
                    let value = gamma * (gamma - S::one()) / two * w * w * h.powf(gamma - two) * tn.powf(two * w - two);
                    out(value, gw - two)
                }
                Some(side) if big_side.is_some() && Some(side) != big_side => {
                    // Smaller-β side of F: the λ x₂‖Tx‖^{2ν} term dominates.
                    let value = -side.sign::<S>() * params.lambda * tn.powf(two * params.nu) * setting.mu(side) * alpha.cos();
                    out(value, two * params.nu)
                }
                Some(side) => {
                    let (a, beta) = geom.side_params(side);
                    let mu = setting.mu(side);
                    let want = lemma_theta0(setting, w, side)?;
                    if beta < S::one() {
                        if !close(params.theta0, want) {
                            return Err(precondition(F_LEMMA, format!("small-beta boundary needs theta0 = theta1 = {want}")));
                        }
                        let ang = setting.angles();
                        let coef = a * mu * cov.sigma2_sq().sqrt() * ang.theta1.cos() / (s * alpha.cos());
                        let value = gamma * w * tn.powf(w - S::one()) * h.powf(gamma - S::one()) * coef
                            * (beta - (S::one() - w) * setting.beta_c())
                            * p.x1.powf(beta - S::one());
                        out(value, gw - two + beta)
                    } else {
                        if !(w > S::zero() && w < S::lit(0.5)) {
                            return Err(precondition(F_LEMMA, "big-beta boundary needs w in (0, 1/2)"));
                        }
                        if !close(params.theta0, want) {
                            return Err(precondition(
                                F_LEMMA,
                                format!("big-beta boundary needs theta0 = theta3 - (1-w) theta2 = {want}"),
                            ));
                        }
                        if !big_beta_theta0_ok(w, want) {
                            return Err(precondition(F_LEMMA, "need sup |w theta - theta0| < pi/2; decrease w"));
                        }
                        let d = setting.angles().d;
                        let value = gamma * w * tn.powf(w - S::one()) * h.powf(gamma - S::one()) * d * mu / s
                            * ((S::one() - w) * S::FRAC_PI_2()).cos();
                        out(value, gw - S::one())
                    }
                }
            }
        }
        FunctionKind::Ell | FunctionKind::GGamma | FunctionKind::WGamma => {
            let eta = match kind {
                FunctionKind::Ell => params.eta,
                FunctionKind::GGamma => setting.angles().eta0,
                _ => setting.angles().eta1,
            };
            match kind {
                FunctionKind::GGamma => check_g(params, setting)?,
                FunctionKind::WGamma => check_w(params, setting)?,
                _ => {}
            }
            let log_tn = tn.ln();
            match side {
                None => {
                    let value = -(S::one() + eta * eta) / (two * tn * tn * log_tn * log_tn);
                    out(value, -two)
                }
                Some(side) => {
                    let (a, beta) = geom.side_params(side);
                    let mu = setting.mu(side);
                    match kind {
                        FunctionKind::GGamma => {
                            let value = -two * a * mu * alpha.cos() * xn.powf(beta - two - gamma);
                            out(value, beta - two - gamma)
                        }
                        FunctionKind::WGamma => {
                            let value = -mu * alpha.cos() / xn.powf(two * gamma);
                            out(value, -two * gamma)
                        }
                        _ => {
                            let want = lemma_eta(setting, side)?;
                            if !close(eta, want) {
                                return Err(precondition(ELL_LEMMA, format!("boundary estimate needs eta = {want}")));
                            }
                            let s2 = s * s;
                            if beta < S::one() {
                                let value = cov.sigma2_sq() * a * mu / (s2 * alpha.cos()) / (tn * tn * log_tn)
                                    * (beta - setting.beta_c())
                                    * p.x1.powf(beta);
                                out(value, beta - two)
                            } else {
                                let (sa, ca) = alpha.sin_cos();
                                let bracket = cov.sigma1_sq() * sa * sa + cov.sigma2_sq() * ca * ca
                                    - cov.sigma1_sq() / beta
                                    - cov.rho() * (two * alpha).sin();
                                let value = mu / (s2 * alpha.cos()) * p.x1 / (tn * tn * log_tn) * bracket;
                                out(value, S::one() / beta - two)
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Validates the `F` construction and returns the side with the larger `β`.
fn check_big_f<S: Scalar>(params: &LyapunovParams<S>, setting: &DriftSetting<S>) -> Result<Side> {
    let (bp, bm) = (setting.geom.beta_plus(), setting.geom.beta_minus());
    if !(bp < S::one() && bm < S::one() && bp != bm) {
        return Err(precondition(BIG_F_LEMMA, "needs beta+ != beta- with both in [0, 1)"));
    }
    let (small, big, big_side) = if bm < bp { (bm, bp, Side::Upper) } else { (bp, bm, Side::Lower) };
    let gw = params.gamma * params.w;
    let two_nu = S::lit(2.0) * params.nu;
    if !(gw + small - S::lit(2.0) < two_nu && two_nu < gw + big - S::lit(2.0)) {
        return Err(precondition(
            BIG_F_LEMMA,
            format!("need gamma*w + beta_small - 2 < 2 nu < gamma*w + beta_big - 2, got 2 nu = {two_nu}"),
        ));
    }
    Ok(big_side)
}

fn check_g<S: Scalar>(params: &LyapunovParams<S>, setting: &DriftSetting<S>) -> Result<()> {
    let bc = setting.beta_c();
    let g = params.gamma;
    let mut bound = setting.moment_p - S::lit(2.0);
    for beta in [setting.geom.beta_plus(), setting.geom.beta_minus()] {
        if !(beta > S::zero() && beta < S::one()) {
            return Err(precondition(G_LEMMA, format!("needs beta+, beta- in (0, 1), got {beta}")));
        }
        if beta > bc {
            return Err(precondition(G_LEMMA, format!("needs beta <= beta_c = {bc}, got {beta}")));
        }
        bound = bound.min(beta).min(S::one() - beta);
    }
    if !(g > S::zero() && g < bound) {
        return Err(precondition(
            G_LEMMA,
            format!("need 0 < gamma < min(beta+, beta-, 1-beta+, 1-beta-, p-2) = {bound}, got {g}"),
        ));
    }
    Ok(())
}

fn check_w<S: Scalar>(params: &LyapunovParams<S>, setting: &DriftSetting<S>) -> Result<()> {
    let g = params.gamma;
    let mut bound = (setting.moment_p - S::one()) / S::lit(2.0);
    for beta in [setting.geom.beta_plus(), setting.geom.beta_minus()] {
        if !(beta > S::one()) {
            return Err(precondition(W_LEMMA, format!("needs beta+, beta- > 1, got {beta}")));
        }
        bound = bound.min(S::one() - S::one() / (S::lit(2.0) * beta));
    }
    if !(g > S::lit(0.5) && g < bound) {
        return Err(precondition(
            W_LEMMA,
            format!("need 1/2 < gamma < min(1 - 1/(2 beta+), 1 - 1/(2 beta-), (p-1)/2) = {bound}, got {g}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftSign {
    Negative,
    Zero,
    Positive,
}

impl DriftSign {
    pub fn of<S: Scalar>(v: S) -> Self {
        if v < S::zero() {
            DriftSign::Negative
        } else if v > S::zero() {
            DriftSign::Positive
        } else {
            DriftSign::Zero
        }
    }
}

/// Sign of the leading drift term in each regime, evaluated at representative
/// points of norm about `radius`: the positive axis for the interior and points
/// on the two boundary curves.
pub fn sign_table<S: Scalar>(
    kind: FunctionKind,
    params: &LyapunovParams<S>,
    setting: &DriftSetting<S>,
    radius: S,
) -> Result<Vec<(Region, DriftSign)>> {
    let mut rows = vec![];
    let interior = Point::new(radius, S::zero());
    let pred = predicted_drift(kind, interior, Region::Interior, params, setting)?;
    rows.push((Region::Interior, DriftSign::of(pred.value)));
    for side in [Side::Upper, Side::Lower] {
        let p = point_on_curve(&setting.geom, side, radius);
        let pred = predicted_drift(kind, p, side.boundary(), params, setting)?;
        rows.push((side.boundary(), DriftSign::of(pred.value)));
    }
    Ok(rows)
}

/// The point of the boundary curve on `side` whose norm is `radius`.
pub fn point_on_curve<S: Scalar>(geom: &WedgeGeometry<S>, side: Side, radius: S) -> Point<S> {
    // ‖(z, d(z))‖ is increasing in z, so bisect.
    let (mut lo, mut hi) = (S::zero(), radius);
    for _ in 0..200 {
        let mid = (lo + hi) / S::lit(2.0);
        let n = mid.hypot(geom.height(mid, side));
        if n < radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Point::new(lo, side.sign::<S>() * geom.height(lo, side))
}
