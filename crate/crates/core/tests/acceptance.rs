//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- 6 12` runs a subset. Failures are
//! reported but do not fail the process unless `ACCEPTANCE_STRICT=1`.
//! Simulation outputs go to `target/tmp/acceptance/`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use wedge_walk::analysis::{
    drift_report, phase_sweep, survival, tail_exponent_auto, SweepRow, SweepSettings, VerdictKind,
};
use wedge_walk::kernel::{
    moment_audit, probe_states, rng_from_seed, AuditConfig, AuditFlag, ContinuousModel, ExactMoments,
    IncrementModel, InteriorBias, LatticeModel, ModelFamily, ModelSpec, ReflectionSpec, WalkRng,
};
use wedge_walk::lyapunov::{grad_h_log, grad_h_w, h_log, h_w, lemma_theta0, point_on_curve};
use wedge_walk::simulator::{run_ensemble, PassageRecord, SimConfig};
use wedge_walk::spectral::{bc_extrema, beta_c, derived_angles, phi, phi_stationary, transform_matrix, Mat2};
use wedge_walk::*;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            detail: vec![],
        }
    }

    /// Records one sub-check.
    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.detail.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.detail.push(format!("     {line}"));
    }
}

fn out_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_csv(name: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    fs::write(out_dir().join(name), text).unwrap();
}

fn random_cov(rng: &mut WalkRng) -> Covariance64 {
    let s1 = 10f64.powf(rng.gen_range(-1.0..1.0));
    let s2 = 10f64.powf(rng.gen_range(-1.0..1.0));
    let c = rng.gen_range(-0.95..0.95);
    Covariance64::new(s1, s2, c * (s1 * s2).sqrt()).unwrap()
}

fn random_alpha(rng: &mut WalkRng) -> f64 {
    rng.gen_range(-FRAC_PI_2..FRAC_PI_2)
}

fn c1() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng_from_seed(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cov = random_cov(&mut rng);
        let t = transform_matrix(&cov);
        let m = t.mul(&cov.matrix()).mul(&t.transpose());
        worst = worst.max(m.max_abs_diff(&Mat2::identity()));
    }
    o.check(worst <= 1e-12, format!("max |T Σ Tᵀ - I| over 1000 random Σ = {worst:.2e} (tol 1e-12)"));
    o
}

fn c2() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng_from_seed(102);
    let (mut at0, mut at_edge, mut flip, mut iso): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let cov = random_cov(&mut rng);
        let alpha = random_alpha(&mut rng);
        at0 = at0.max((beta_c(&cov, 0.0).unwrap() - cov.sigma1_sq() / cov.sigma2_sq()).abs());
        for edge in [FRAC_PI_2, -FRAC_PI_2] {
            at_edge = at_edge.max((beta_c(&cov, edge).unwrap() - 1.0).abs());
        }
        let mirrored = Covariance64::new(cov.sigma1_sq(), cov.sigma2_sq(), -cov.rho()).unwrap();
        flip = flip.max((beta_c(&cov, alpha).unwrap() - beta_c(&mirrored, -alpha).unwrap()).abs());
        let k = cov.sigma1_sq();
        let scalar = Covariance64::new(k, k, 0.0).unwrap();
        iso = iso.max((beta_c(&scalar, alpha).unwrap() - 1.0).abs());
    }
    o.check(at0 <= 1e-12, format!("beta_c(Σ, 0) = σ1²/σ2²: max error {at0:.2e}"));
    o.check(at_edge <= 1e-12, format!("beta_c(Σ, ±π/2) = 1: max error {at_edge:.2e}"));
    o.check(flip <= 1e-12, format!("beta_c invariant under (α, ρ) -> (-α, -ρ): max error {flip:.2e}"));
    o.check(iso <= 1e-12, format!("σ1² = σ2², ρ = 0 gives beta_c = 1: max error {iso:.2e}"));
    o
}

fn c3() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng_from_seed(103);
    let n_grid = 100_000;
    let grid: Vec<f64> = (0..n_grid).map(|k| -FRAC_PI_2 + PI * k as f64 / (n_grid - 1) as f64).collect();
    let (mut closed, mut searched, mut at_arg): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut below_one = 0;
    let n_cov = 200;
    for _ in 0..n_cov {
        let cov = random_cov(&mut rng);
        let ext = bc_extrema(&cov);
        // Eigenvalues of Σ from trace and determinant, over σ2².
        let (s1, s2, rho) = (cov.sigma1_sq(), cov.sigma2_sq(), cov.rho());
        let (tr, det) = (s1 + s2, s1 * s2 - rho * rho);
        let disc = (tr * tr / 4.0 - det).sqrt();
        closed = closed
            .max((ext.bc_max - (tr / 2.0 + disc) / s2).abs() / ext.bc_max)
            .max((ext.bc_min - (tr / 2.0 - disc) / s2).abs() / ext.bc_max);
        let values: Vec<f64> = grid.iter().map(|&a| beta_c(&cov, a).unwrap()).collect();
        let gmax = values.iter().cloned().fold(f64::MIN, f64::max);
        let gmin = values.iter().cloned().fold(f64::MAX, f64::min);
        searched = searched.max((gmax - ext.bc_max).abs()).max((gmin - ext.bc_min).abs());
        at_arg = at_arg
            .max((beta_c(&cov, ext.argmin.unwrap()).unwrap() - ext.bc_min).abs())
            .max((beta_c(&cov, ext.argmax.unwrap()).unwrap() - ext.bc_max).abs());
        below_one += (ext.bc_min < 1.0) as usize;
    }
    o.check(closed <= 1e-12, format!("closed form against eigenvalues of Σ / σ2²: max rel error {closed:.2e}"));
    o.check(
        searched <= 1e-6,
        format!("closed form against a 10^5-point grid search ({n_cov} random Σ): max error {searched:.2e} (tol 1e-6)"),
    );
    o.check(at_arg <= 1e-12, format!("beta_c at the reported argmin/argmax: max error {at_arg:.2e}"));
    o.check(below_one == n_cov, format!("bc_min < 1 for {below_one}/{n_cov} random nondegenerate Σ"));
    for (s1, s2, rho) in [(1.0, 4.0, 0.0), (1.0, 1.0, 0.5), (1.0, 1.0, -0.3), (3.0, 2.0, 0.1)] {
        let ext = bc_extrema(&Covariance64::new(s1, s2, rho).unwrap());
        o.check(ext.bc_min < 1.0, format!("bc_min(σ1²={s1}, σ2²={s2}, ρ={rho}) = {:.6} < 1", ext.bc_min));
    }
    let edge = bc_extrema(&Covariance64::new(4.0, 1.0, 0.0).unwrap());
    o.note(format!(
        "boundary case σ1² > σ2², ρ = 0 (e.g. diag(4, 1)): bc_min = {} is attained at α = ±π/2, so it equals 1",
        edge.bc_min
    ));
    let mut lemma: f64 = 0.0;
    for b in [0.5f64, -0.5, 0.1, 1.0, 2.0, -3.0, 25.0] {
        let st = phi_stationary(b).unwrap();
        let want = 0.5 * (1.0 - (1.0 + 4.0 * b * b).sqrt());
        lemma = lemma
            .max((st.phi_min - want).abs())
            .max((phi(b, st.alpha0) - want).abs())
            .max((st.phi_max - (1.0 - want)).abs())
            .max((phi(b, st.alpha1) - (1.0 - want)).abs());
    }
    let half = phi_stationary(0.5).unwrap().phi_min;
    let want = 0.5 * (1.0 - 2f64.sqrt());
    o.check((half - want).abs() <= 1e-12, format!("b = 1/2: phi_min = {half:.15} vs (1 - √2)/2 = {want:.15}"));
    o.check(lemma <= 1e-12, format!("stationary values of φ(α) = sin²α + b sin 2α for 7 values of b: max error {lemma:.2e}"));
    o
}

/// Observed orders `log2(e_k / e_{k+1})` of the five-point Laplacian under step halving.
fn laplacian_orders(f: impl Fn(Point64) -> f64, x: Point64, h0: f64) -> Vec<f64> {
    let lap = |h: f64| {
        (f(Point::new(x.x1 + h, x.x2)) + f(Point::new(x.x1 - h, x.x2)) + f(Point::new(x.x1, x.x2 + h))
            + f(Point::new(x.x1, x.x2 - h))
            - 4.0 * f(x))
            / (h * h)
    };
    let errs: Vec<f64> = (0..4).map(|k| lap(h0 / 2f64.powi(k)).abs()).collect();
    errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}

fn c4() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng_from_seed(104);
    let random_point = |rng: &mut WalkRng| {
        let r = 10f64.powf(rng.gen_range(1.0..4.0));
        Point::from_polar(r, rng.gen_range(-1.4..1.4))
    };
    let (mut lo, mut hi, mut sum, mut count) = (f64::MAX, f64::MIN, 0.0, 0);
    for _ in 0..100 {
        let x = random_point(&mut rng);
        let theta0 = rng.gen_range(-0.5..0.5);
        let eta = rng.gen_range(-2.0..2.0);
        let mut orders = vec![];
        for w in [-0.5, 0.3, 0.7, 1.5] {
            orders.extend(laplacian_orders(|p| h_w(p, w, theta0).unwrap(), x, 0.05 * x.norm()));
        }
        orders.extend(laplacian_orders(|p| h_log(p, eta).unwrap(), x, 0.05 * x.norm()));
        for q in orders {
            lo = lo.min(q);
            hi = hi.max(q);
            sum += q;
            count += 1;
        }
    }
    o.check(
        lo >= 1.8 && hi <= 2.2,
        format!(
            "five-point Laplacian of h_w (w = -0.5, 0.3, 0.7, 1.5) and log r + ηθ -> 0 at order {:.3} (range {lo:.3}..{hi:.3}) at 100 points",
            sum / count as f64
        ),
    );
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = random_point(&mut rng);
        let w = rng.gen_range(-1.0..2.0);
        let theta0 = rng.gen_range(-0.5..0.5);
        let eta = rng.gen_range(-2.0..2.0);
        let h = 1e-5 * x.norm();
        let central = |f: &dyn Fn(Point64) -> f64| {
            Point::new(
                (f(Point::new(x.x1 + h, x.x2)) - f(Point::new(x.x1 - h, x.x2))) / (2.0 * h),
                (f(Point::new(x.x1, x.x2 + h)) - f(Point::new(x.x1, x.x2 - h))) / (2.0 * h),
            )
        };
        let g = grad_h_w(x, w, theta0).unwrap();
        let fd = central(&|p| h_w(p, w, theta0).unwrap());
        worst = worst.max((g - fd).norm() / g.norm());
        let g = grad_h_log(x, eta).unwrap();
        let fd = central(&|p| h_log(p, eta).unwrap());
        worst = worst.max((g - fd).norm() / g.norm());
    }
    o.check(
        worst <= 1e-6,
        format!("analytic gradients against central differences at 1000 points, r in [10, 10^4]: max rel error {worst:.2e}"),
    );
    o
}

fn c5() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng_from_seed(105);
    let (mut slack, mut ident, mut min_cos) = (f64::MAX, 0.0f64, f64::MAX);
    for _ in 0..10_000 {
        let cov = random_cov(&mut rng);
        let alpha = random_alpha(&mut rng);
        let ang = derived_angles(&cov, alpha).unwrap();
        let (s1, s2, rho) = (cov.sigma1_sq(), cov.sigma2_sq(), cov.rho());
        let bound = 0.5 * (s1 + s2) - 0.5 * ((s1 - s2).powi(2) + 4.0 * rho * rho).sqrt();
        slack = slack.min((ang.d * ang.d - bound) / (s1 + s2));
        let c = (ang.theta3 - ang.theta2).cos();
        ident = ident.max((c - cov.s() / (s1.sqrt() * ang.d) * alpha.cos()).abs());
        min_cos = min_cos.min(c);
    }
    o.check(slack >= -1e-12, format!("d² minus its lower bound, over σ1² + σ2²: min {slack:.3e} on 10^4 random (Σ, α)"));
    o.check(ident <= 1e-12, format!("cos(θ3 - θ2) = s cos α / (σ1 d): max error {ident:.2e}"));
    o.check(min_cos > 0.0, format!("cos(θ3 - θ2) > 0: min {min_cos:.3e}"));
    o
}

/// Lattice state on `side` at norm about `r`, at most one unit inside the curve.
fn lattice_boundary_probe(geom: &Geometry64, side: Side, r: f64) -> Point64 {
    let p = point_on_curve(geom, side, r);
    let x1 = p.x1.round();
    Point::new(x1, side.sign::<f64>() * geom.boundary_height(x1, side).unwrap().floor())
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    let beta = 0.5;
    // a = 1 keeps the probe angle small enough at |x| = 100 for the leading term to dominate.
    let geom = Geometry64::symmetric(1.0, beta, 3.0).unwrap();
    let m = LatticeModel::new(geom, ReflectionSpec::new(0.0, 1.0, 1.0).unwrap(), Covariance64::identity()).unwrap();
    let setting = m.declared().drift_setting(&geom);
    let bc = setting.beta_c();
    o.note(format!("lattice Σ = I, α = 0, β = {beta}, a = 1, B = 3, μ = 1, beta_c = {bc}; f_w^γ with γ = 1, n = 10^6"));
    for w in [0.2, 1.0 - beta / bc, 0.8] {
        let factor = beta - (1.0 - w) * bc;
        for side in [Side::Upper, Side::Lower] {
            let probes: Vec<_> = [1e2, 1e3, 1e4].iter().map(|&r| lattice_boundary_probe(&geom, side, r)).collect();
            let params = Params64 {
                w,
                gamma: 1.0,
                theta0: lemma_theta0(&setting, w, side).unwrap(),
                ..Default::default()
            };
            let rows = drift_report(&m, FunctionKind::FwGamma, &params, &probes, 1_000_000, 600 + (10.0 * w) as u64).unwrap();
            for r in rows {
                let z = r.empirical / r.std_error;
                let ok = if factor.abs() < 1e-12 {
                    r.empirical.abs() <= 3.0 * r.std_error
                } else {
                    r.empirical.signum() == factor.signum() && r.predicted.signum() == factor.signum()
                };
                let want = if factor.abs() < 1e-12 {
                    "0 within 3 SE".to_string()
                } else if factor > 0.0 {
                    "+".to_string()
                } else {
                    "-".to_string()
                };
                o.check(
                    ok,
                    format!(
                        "w={w:.1} {:>14} ({:>5}, {:>5}) want {want}: empirical {:+.3e} (z = {z:+.1}), leading term {:+.3e}",
                        r.regime.label(),
                        r.state.x1,
                        r.state.x2,
                        r.empirical,
                        r.predicted
                    ),
                );
            }
        }
    }
    o
}

fn c7() -> Outcome {
    let mut o = Outcome::new();
    let geom = Geometry64::symmetric(1.0, 0.5, 3.0).unwrap();
    let m = LatticeModel::new(geom, ReflectionSpec::new(0.0, 1.0, 1.0).unwrap(), Covariance64::identity()).unwrap();
    let x = Point::new(1000.0, 12.0);
    assert_eq!(m.region(x), Region::Interior);
    let n = 10_000_000;
    let flat = Params64 {
        w: 0.4,
        gamma: 1.0,
        ..Default::default()
    };
    let r = drift_report(&m, FunctionKind::FwGamma, &flat, &[x], n, 701).unwrap()[0];
    o.check(
        r.empirical.abs() <= 3.0 * r.std_error,
        format!("γ = 1, w = 0.4 at ({}, {}): empirical {:+.3e}, SE {:.2e}", x.x1, x.x2, r.empirical, r.std_error),
    );
    let curved = Params64 {
        w: 0.4,
        gamma: 0.5,
        ..Default::default()
    };
    let r = drift_report(&m, FunctionKind::FwGamma, &curved, &[x], n, 702).unwrap()[0];
    let ratio = r.empirical / r.predicted;
    o.check(
        r.empirical < 0.0 && (0.5..=2.0).contains(&ratio),
        format!(
            "γ = 0.5, w = 0.4: empirical {:+.4e} (SE {:.1e}), predicted {:+.4e}, ratio {ratio:.4}",
            r.empirical, r.std_error, r.predicted
        ),
    );
    o
}

fn c8() -> Outcome {
    let mut o = Outcome::new();
    let n = 1_000_000;
    let d14 = Covariance64::new(1.0, 4.0, 0.0).unwrap();
    let params = Params64 {
        gamma: 0.6,
        ..Default::default()
    };
    for alpha in [0.0, 0.5] {
        let geom = Geometry64::symmetric(10.0, 2.0, 3.0).unwrap();
        let refl = ReflectionSpec::new(alpha, 1.0, 0.5).unwrap();
        let m = LatticeModel::new(geom, refl, d14).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let x = lattice_boundary_probe(&geom, side, 1e3);
            let r = drift_report(&m, FunctionKind::WGamma, &params, &[x], n, 801).unwrap()[0];
            let reference = -refl.mu(side) * alpha.cos() * x.norm().powf(-2.0 * params.gamma);
            let ratio = r.empirical / reference;
            o.check(
                (0.5..=2.0).contains(&ratio),
                format!(
                    "w_γ, γ = 0.6, β = 2, Σ = diag(1, 4), α = {alpha}, {} ({}, {}): empirical {:+.4e}, -μ cos α |x|^(-2γ) = {:+.4e}, ratio {ratio:.3}",
                    r.regime.label(),
                    x.x1,
                    x.x2,
                    r.empirical,
                    reference
                ),
            );
        }
    }
    let configs = [
        (Covariance64::new(1.0, 4.0, 0.0).unwrap(), 0.0, 0.1),
        (Covariance64::new(1.0, 4.0, 0.0).unwrap(), 0.0, 0.25),
        (Covariance64::identity(), 0.0, 0.5),
        (Covariance64::identity(), 0.9, 0.9),
        (Covariance64::new(1.0, 1.0, 0.5).unwrap(), -0.3, 0.4),
    ];
    for (cov, alpha, beta) in configs {
        let geom = Geometry64::symmetric(10.0, beta, 3.0).unwrap();
        let m = LatticeModel::new(geom, ReflectionSpec::new(alpha, 1.0, 1.0).unwrap(), cov).unwrap();
        let bc = m.declared().drift_setting(&geom).beta_c();
        let params = Params64 {
            gamma: 0.5 * beta.min(1.0 - beta),
            ..Default::default()
        };
        let mut probes = vec![];
        for side in [Side::Upper, Side::Lower] {
            probes.extend([1e2, 1e3, 1e4].iter().map(|&r| lattice_boundary_probe(&geom, side, r)));
        }
        let rows = drift_report(&m, FunctionKind::GGamma, &params, &probes, n, 802).unwrap();
        let worst = rows.iter().map(|r| r.empirical / r.std_error).fold(f64::MIN, f64::max);
        o.check(
            rows.iter().all(|r| r.empirical < 0.0),
            format!(
                "g_γ, Σ = ({}, {}, {}), α = {alpha}, β = {beta} <= beta_c = {bc:.4}, γ = {:.3}: negative at {}/{} boundary probes (largest z = {worst:.1})",
                cov.sigma1_sq(),
                cov.sigma2_sq(),
                cov.rho(),
                params.gamma,
                rows.iter().filter(|r| r.empirical < 0.0).count(),
                rows.len()
            ),
        );
    }
    o
}

fn phase_settings(master_seed: u64) -> SweepSettings {
    SweepSettings {
        a_plus: 10.0,
        a_minus: 10.0,
        band_width: 3.0,
        mu_plus: 1.0,
        mu_minus: 1.0,
        model: ModelSpec {
            family: ModelFamily::Lattice,
            ..Default::default()
        },
        x0: Point::new(50.0, 0.0),
        return_radius: 20.0,
        horizon: 1_000_000,
        n_walkers: 1000,
        master_seed,
        force_critical: false,
    }
}

fn save_sweep(name: &str, rows: &[SweepRow]) {
    write_csv(name, &SweepRow::CSV_HEADER, rows.iter().map(|r| r.csv_row().to_vec()));
}

/// The Σ = diag(1, 4), α = 0 column, shared by criteria 9 and 10.
fn diag_column() -> &'static [SweepRow] {
    static ROWS: OnceLock<Vec<SweepRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let cov = Covariance64::new(1.0, 4.0, 0.0).unwrap();
        let betas = [(0.1, 0.1), (0.5, 0.5), (2.0, 2.0)];
        let rows = phase_sweep(&cov, &[0.0], &betas, &phase_settings(900), |_| {});
        save_sweep("sweep_diag14_alpha0.csv", &rows);
        rows
    })
}

fn describe(r: &SweepRow) -> String {
    format!(
        "α = {:.4}, β = {}, beta_c = {:.3}: {} (S_T = {:.3}, S_2T = {:.3}, {})",
        r.alpha,
        r.beta_plus,
        r.beta_c,
        r.verdict,
        r.s_t.unwrap_or(f64::NAN),
        r.s_2t.unwrap_or(f64::NAN),
        r.note
    )
}

fn c9() -> Outcome {
    let mut o = Outcome::new();
    let rows = diag_column();
    o.note("lattice, Σ = diag(1, 4), a = 10, B = 3, μ = 1, x0 = (50, 0), r = 20, n = 1000, T = 10^6".into());
    for (r, want) in rows[..2].iter().zip([VerdictKind::RecurrentLike, VerdictKind::TransientLike]) {
        o.check(r.verdict == want.label(), format!("want {}: {}", want.label(), describe(r)));
    }
    o
}

fn c10() -> Outcome {
    let mut o = Outcome::new();
    let rows = diag_column();
    let got: Vec<&str> = rows.iter().map(|r| r.verdict.as_str()).collect();
    let want = ["RecurrentLike", "TransientLike", "RecurrentLike"];
    for (r, w) in rows.iter().zip(want) {
        o.check(r.verdict == w, format!("want {w}: {}", describe(r)));
    }
    o.note(format!("sequence over β = 0.1, 0.5, 2: {got:?}"));
    o
}

fn c11() -> Outcome {
    let mut o = Outcome::new();
    let cov = Covariance64::new(1.0, 1.0, 0.5).unwrap();
    let ext = bc_extrema(&cov);
    let alpha_min = ext.argmin.unwrap();
    o.note(format!(
        "Σ = (1, 0.5; 0.5, 1): bc_min = {} at α = {alpha_min:.6}, beta_c(0) = {}",
        ext.bc_min,
        beta_c(&cov, 0.0).unwrap()
    ));
    let rows = phase_sweep(&cov, &[alpha_min, 0.0], &[(0.75, 0.75)], &phase_settings(1100), |_| {});
    save_sweep("sweep_oblique.csv", &rows);
    for (r, want) in rows.iter().zip([VerdictKind::TransientLike, VerdictKind::RecurrentLike]) {
        o.check(r.verdict == want.label(), format!("want {}: {}", want.label(), describe(r)));
    }
    o
}

fn c12() -> Outcome {
    let mut o = Outcome::new();
    for (beta, name) in [(0.0, "strip"), (0.5, "beta05")] {
        let geom = Geometry64::symmetric(10.0, beta, 3.0).unwrap();
        let m = LatticeModel::new(geom, ReflectionSpec::new(0.0, 1.0, 1.0).unwrap(), Covariance64::identity()).unwrap();
        let cfg = SimConfig {
            x0: Point::new(50.0, 0.0),
            horizon: 10_000_000,
            return_radius: 20.0,
            n_walkers: 10_000,
            master_seed: 1200 + (beta * 10.0) as u64,
        };
        let records = run_ensemble(&m, &cfg).unwrap();
        write_csv(
            &format!("passages_{name}.csv"),
            &PassageRecord::CSV_HEADER,
            records.iter().map(|r| r.csv_row().to_vec()),
        );
        let curve = survival(&records, cfg.horizon).unwrap();
        write_csv(
            &format!("survival_{name}.csv"),
            &["t", "s_hat", "radius"],
            curve
                .points
                .iter()
                .map(|p| vec![p.t.to_string(), format!("{:.10e}", p.s_hat), format!("{:.10e}", p.radius)]),
        );
        let s0 = 0.5 * (1.0 - beta / beta_c(&Covariance64::identity(), 0.0).unwrap());
        match tail_exponent_auto(&curve) {
            Ok(t) => o.check(
                (t.exponent_hat - s0).abs() <= 0.1,
                format!(
                    "β = {beta}, Σ = I, α = 0: tail_hat = {:.4} ± {:.4} (window {:?}, {} censored of {}), s0 = {s0}, tol 0.1",
                    t.exponent_hat,
                    t.std_error,
                    t.fit_window,
                    curve.n_censored(),
                    curve.n
                ),
            ),
            Err(e) => o.check(false, format!("β = {beta}: tail fit failed: {e}")),
        }
    }
    o
}

fn c13() -> Outcome {
    let mut o = Outcome::new();
    let geom = Geometry64::symmetric(10.0, 0.5, 3.0).unwrap();
    let refl = ReflectionSpec::new(0.4, 1.0, 0.7).unwrap();
    let cov = Covariance64::new(1.0, 2.0, 0.5).unwrap();
    let probes = probe_states(&geom, &[1e2, 1e3, 1e4, 1e5]);
    let cfg = AuditConfig {
        seed: 1300,
        ..Default::default()
    };
    let lattice = LatticeModel::new(geom, refl, cov).unwrap();
    let continuous = ContinuousModel::new(geom, refl, cov, 0.5).unwrap();
    for m in [&lattice as &dyn IncrementModel, &continuous] {
        let a = moment_audit(m, &probes, &cfg).unwrap();
        let worst = a
            .states
            .iter()
            .filter(|s| s.region.is_boundary())
            .map(|s| s.scaled_excess)
            .fold(0.0, f64::max);
        o.check(
            a.passed() && a.states.len() == 12,
            format!(
                "{}: {}/{} probe states pass, largest boundary (|mean - μn| - radius)+ |x| = {worst:.3} (limit {})",
                a.model,
                a.states.len() - a.flagged().count(),
                a.states.len(),
                cfg.c_reflection
            ),
        );
        if m.name() == "lattice" {
            let exact: Vec<ExactMoments> = a
                .states
                .iter()
                .filter(|s| s.region == Region::Interior)
                .map(|s| s.exact.unwrap())
                .collect();
            o.check(
                exact.len() == 4 && exact.iter().all(|e| e.mean == Point::new(0.0, 0.0)),
                format!("lattice: exact interior mean is (0, 0) at {} interior states", exact.len()),
            );
        }
    }
    let x = Point::new(1e4, 0.0);
    let fault_cfg = AuditConfig {
        n_samples: 1_000_000,
        ..cfg
    };
    let faulty: [(&str, Box<dyn IncrementModel>); 2] = [
        (
            "lattice",
            Box::new(InteriorBias {
                inner: LatticeModel::new(geom, refl, cov).unwrap(),
                bias: Point::new(0.01, 0.0),
            }),
        ),
        (
            "continuous",
            Box::new(InteriorBias {
                inner: ContinuousModel::new(geom, refl, cov, 0.5).unwrap(),
                bias: Point::new(0.01, 0.0),
            }),
        ),
    ];
    for (name, m) in faulty {
        let a = moment_audit(m.as_ref(), &[x], &fault_cfg).unwrap();
        let s = &a.states[0];
        o.check(
            s.flag == AuditFlag::InteriorDrift,
            format!(
                "{name} with interior mean (0.01, 0) at |x| = 10^4: flag {:?}, |mean| = {:.4e}, radius {:.2e}",
                s.flag, s.mean_error, s.mean_radius
            ),
        );
    }
    o
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 13] = [
        (1, "T Σ Tᵀ = I", c1),
        (2, "beta_c identities", c2),
        (3, "bc_extrema: closed form, grid search, phi stationary values", c3),
        (4, "harmonicity and gradients", c4),
        (5, "angle inequalities", c5),
        (6, "f_w^γ boundary drift signs (lattice)", c6),
        (7, "f_w^γ interior drift", c7),
        (8, "w_γ and g_γ boundary drifts", c8),
        (9, "phase: Σ = diag(1, 4), α = 0", c9),
        (10, "phase: non-monotonicity in β", c10),
        (11, "phase: oblique reflection", c11),
        (12, "tail exponents", c12),
        (13, "moment audit", c13),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = vec![];
    let start = Instant::now();
    for (n, title, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {verdict}  {title}  [{:.1}s]", t0.elapsed().as_secs_f64());
        for line in &outcome.detail {
            println!("    {line}");
        }
        if !outcome.pass {
            failed.push(n);
        }
    }
    println!(
        "acceptance: {} failed {:?}, outputs in {}, total {:.0}s",
        failed.len(),
        failed,
        out_dir().display(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
