//! Minimum-norm probability weights with a prescribed mean, used to build the
//! boundary step distributions of the lattice model.

use crate::geometry::Point;

type P = Point<f64>;

/// Largest `t ∈ [0, 1]` such that `t·target` lies in the convex hull of `points`.
/// The origin must be one of the points.
pub fn feasible_fraction(points: &[P], target: P) -> f64 {
    let hull = convex_hull(points);
    if target.norm() == 0.0 {
        return 1.0;
    }
    match hull.len() {
        0 | 1 => 0.0,
        2 => {
            // Segment through the origin.
            let d = hull[1] - hull[0];
            if d.perp().dot(target).abs() > 1e-12 * d.norm() * target.norm() {
                return 0.0;
            }
            let mut t = f64::INFINITY;
            for &p in &hull {
                let proj = p.dot(target) / target.norm_sq();
                if proj > 0.0 {
                    t = t.min(proj);
                }
            }
            if t.is_finite() { t.min(1.0) } else { 0.0 }
        }
        _ => {
            let mut t: f64 = 1.0;
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                // Counter-clockwise hull: outward normal of edge a→b.
                let e = b - a;
                let n = P::new(e.x2, -e.x1);
                let nm = n.dot(target);
                if nm > 0.0 {
                    t = t.min((n.dot(a) / nm).max(0.0));
                }
            }
            t
        }
    }
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull(points: &[P]) -> Vec<P> {
    let mut pts: Vec<P> = points.to_vec();
    pts.sort_by(|a, b| a.x1.total_cmp(&b.x1).then(a.x2.total_cmp(&b.x2)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: P, a: P, b: P| (a - o).x1 * (b - o).x2 - (a - o).x2 * (b - o).x1;
    let mut lower: Vec<P> = vec![];
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P> = vec![];
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if det.abs() <= 1e-14 * scale * scale * scale {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        let dk = mk[0][0] * (mk[1][1] * mk[2][2] - mk[1][2] * mk[2][1])
            - mk[0][1] * (mk[1][0] * mk[2][2] - mk[1][2] * mk[2][0])
            + mk[0][2] * (mk[1][0] * mk[2][1] - mk[1][1] * mk[2][0]);
        *o = dk / det;
    }
    Some(out)
}

/// Weights `w ≥ 0` with `Σw = 1`, `Σ w_k v_k = target` and minimal `Σ w_k²`,
/// together with the dual vector `λ` certifying optimality
/// (`w_k = max(0, λ₀ + λ₁ v_k1 + λ₂ v_k2)`).
///
/// Returns `None` if the target is not in the convex hull of `steps`.
pub fn min_norm_weights(steps: &[P], target: P) -> Option<(Vec<f64>, [f64; 3])> {
    let a: Vec<[f64; 3]> = steps.iter().map(|v| [1.0, v.x1, v.x2]).collect();
    let b = [1.0, target.x1, target.x2];
    let n = steps.len() as f64;
    let mut lam = [1.0 / n, 0.0, 0.0];
    let weights = |lam: &[f64; 3]| -> Vec<f64> {
        a.iter().map(|ak| (lam[0] * ak[0] + lam[1] * ak[1] + lam[2] * ak[2]).max(0.0)).collect()
    };
    let dual = |lam: &[f64; 3]| -> f64 {
        let w = weights(lam);
        0.5 * w.iter().map(|x| x * x).sum::<f64>() - (lam[0] * b[0] + lam[1] * b[1] + lam[2] * b[2])
    };
    let grad = |lam: &[f64; 3]| -> [f64; 3] {
        let w = weights(lam);
        let mut g = [-b[0], -b[1], -b[2]];
        for (k, ak) in a.iter().enumerate() {
            for i in 0..3 {
                g[i] += w[k] * ak[i];
            }
        }
        g
    };
    let gmax = |g: &[f64; 3]| g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for _ in 0..200 {
        let w = weights(&lam);
        let g = grad(&lam);
        let mut h = [[0.0; 3]; 3];
        for ak in &a {
            if lam[0] * ak[0] + lam[1] * ak[1] + lam[2] * ak[2] > 0.0 {
                for i in 0..3 {
                    for j in 0..3 {
                        h[i][j] += ak[i] * ak[j];
                    }
                }
            }
        }
        let gnorm = gmax(&g);
        if gnorm < 1e-15 {
            return Some((w, lam));
        }
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += 1e-12;
        }
        let dir = match solve3(h, [-g[0], -g[1], -g[2]]) {
            Some(d) => d,
            None => [-g[0], -g[1], -g[2]],
        };
        let f0 = dual(&lam);
        let slope: f64 = (0..3).map(|i| g[i] * dir[i]).sum();
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = [lam[0] + step * dir[0], lam[1] + step * dir[1], lam[2] + step * dir[2]];
            // Near the optimum the dual decrease drops below rounding; then
            // progress is judged by the gradient instead.
            if dual(&trial) <= f0 + 1e-4 * step * slope || gmax(&grad(&trial)) < 0.5 * gnorm {
                lam = trial;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let w = weights(&lam);
    let resid = residual(steps, &w, target);
    if resid < 1e-12 {
        Some((w, lam))
    } else {
        None
    }
}

/// Max-norm violation of the mean and normalisation constraints.
pub fn residual(steps: &[P], w: &[f64], target: P) -> f64 {
    let total: f64 = w.iter().sum();
    let mut m = P::new(0.0, 0.0);
    for (v, &wk) in steps.iter().zip(w) {
        m = m + *v * wk;
    }
    (total - 1.0).abs().max((m - target).x1.abs()).max((m - target).x2.abs())
}
