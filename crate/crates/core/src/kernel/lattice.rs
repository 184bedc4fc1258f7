//! Nearest-neighbour style walk on `ℤ² ∩ D` with exact interior covariance and
//! exact boundary mean.

use std::sync::OnceLock;

use rand::Rng;

use super::qp::{feasible_fraction, min_norm_weights};
use super::{boundary_direction, Declared, IncrementModel, ReflectionSpec, WalkRng};
use crate::error::{Result, WedgeError};
use crate::geometry::{Point, Region, Side};
use crate::{Covariance64, Geometry64, Point64};

/// Largest coordinate of an interior jump.
const MAX_RANGE: i32 = 3;
/// Columns `x1 < COLUMN_CACHE` are memoised.
const COLUMN_CACHE: usize = 1 << 16;
/// Near the wall every boundary row gets its own law; above this many rows they
/// are built on demand instead.
const ROW_CACHE: i64 = 1 << 14;

#[derive(Debug, Clone, Copy)]
struct StepDist {
    n: u8,
    steps: [(i8, i8); 9],
    cum: [f64; 9],
}

impl StepDist {
    fn from_weights(entries: &[((i8, i8), f64)]) -> Self {
        let mut d = StepDist {
            n: 0,
            steps: [(0, 0); 9],
            cum: [0.0; 9],
        };
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let mut acc = 0.0;
        for &(s, w) in entries.iter().filter(|e| e.1 > 1e-14 * total) {
            acc += w / total;
            d.steps[d.n as usize] = s;
            d.cum[d.n as usize] = acc;
            d.n += 1;
        }
        d.cum[d.n as usize - 1] = 1.0;
        d
    }

    #[inline]
    fn sample(&self, u: f64) -> (i8, i8) {
        // Branch-free: outcomes are close to equiprobable, so a search loop mispredicts.
        let last = self.n as usize - 1;
        let idx = self.cum[..last].iter().map(|&c| (u >= c) as usize).sum::<usize>();
        self.steps[idx]
    }

    fn entries(&self) -> Vec<(Point64, f64)> {
        let mut prev = 0.0;
        (0..self.n as usize)
            .map(|i| {
                let p = self.cum[i] - prev;
                prev = self.cum[i];
                (Point::new(self.steps[i].0 as f64, self.steps[i].1 as f64), p)
            })
            .collect()
    }
}

#[derive(Debug)]
struct Column {
    top: i64,
    bottom: i64,
    /// Interior states are `int_lo..=int_hi`; empty when `int_lo > int_hi`.
    int_lo: i64,
    int_hi: i64,
    /// Boundary laws as `(first row, law)`, sorted; a law holds up to the next
    /// first row. Empty when the laws are built on demand.
    segments: Vec<(i64, StepDist)>,
}

impl Column {
    fn segment(&self, x2: i64) -> Option<&StepDist> {
        let i = self.segments.partition_point(|s| s.0 <= x2);
        (i > 0).then(|| &self.segments[i - 1].1)
    }
}

/// Interior jump law on `{-3..3}²` with mean zero and covariance exactly `cov`.
///
/// Searches symmetric pairs `±v` (at most three of them) with the smallest
/// coordinate range first, then prefers the least lazy law (largest total mass on
/// nonzero jumps) and then the smallest fourth moment.
pub fn lattice_interior_support(cov: &Covariance64) -> Result<Vec<(Point64, f64)>> {
    let target = [cov.sigma1_sq(), cov.sigma2_sq(), cov.rho()];
    let scale = target.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut pairs: Vec<(i32, i32)> = vec![];
    for a in 0..=MAX_RANGE {
        for b in -MAX_RANGE..=MAX_RANGE {
            if a > 0 || b > 0 {
                pairs.push((a, b));
            }
        }
    }
    let range = |p: &(i32, i32)| p.0.abs().max(p.1.abs());
    let moments = |p: &(i32, i32)| [(p.0 * p.0) as f64, (p.1 * p.1) as f64, (p.0 * p.1) as f64];
    for r in 1..=MAX_RANGE {
        let cand: Vec<(i32, i32)> = pairs.iter().copied().filter(|p| range(p) <= r).collect();
        let mut best: Option<(f64, f64, Vec<((i32, i32), f64)>)> = None;
        let mut consider = |subset: &[(i32, i32)]| {
            if !subset.iter().any(|p| range(p) == r) {
                return;
            }
            let cols: Vec<[f64; 3]> = subset.iter().map(moments).collect();
            let Some(q) = solve_nonneg_mix(&cols, target, scale) else { return };
            let total: f64 = q.iter().sum();
            if total > 1.0 + 1e-12 {
                return;
            }
            let m4: f64 = subset
                .iter()
                .zip(&q)
                .map(|(p, qi)| qi * ((p.0 * p.0 + p.1 * p.1) as f64).powi(2))
                .sum();
            let better = match &best {
                None => true,
                Some((bt, bm, _)) => total > bt + 1e-12 || ((total - bt).abs() <= 1e-12 && m4 < bm - 1e-12),
            };
            if better {
                best = Some((total, m4, subset.iter().copied().zip(q).collect()));
            }
        };
        for i in 0..cand.len() {
            consider(&[cand[i]]);
            for j in i + 1..cand.len() {
                consider(&[cand[i], cand[j]]);
                for k in j + 1..cand.len() {
                    consider(&[cand[i], cand[j], cand[k]]);
                }
            }
        }
        if let Some((total, _, mix)) = best {
            let mut out = vec![];
            for ((a, b), q) in mix {
                if q > 0.0 {
                    out.push((Point::new(a as f64, b as f64), q / 2.0));
                    out.push((Point::new(-a as f64, -b as f64), q / 2.0));
                }
            }
            let lazy = 1.0 - total;
            if lazy > 1e-15 {
                out.push((Point::new(0.0, 0.0), lazy));
            }
            return Ok(out);
        }
    }
    Err(WedgeError::Construction(format!(
        "covariance (sigma1_sq={}, sigma2_sq={}, rho={}) is not realisable by symmetric jumps in {{-3..3}}^2: \
         the moment equations E[D1^2]=sigma1_sq, E[D2^2]=sigma2_sq, E[D1 D2]=rho have no solution with total mass <= 1",
        target[0], target[1], target[2]
    )))
}

/// Nonnegative `q` with `Σ q_i cols_i = target` exactly (to rounding), if one exists.
fn solve_nonneg_mix(cols: &[[f64; 3]], target: [f64; 3], scale: f64) -> Option<Vec<f64>> {
    let k = cols.len();
    // Normal equations; exact solutions are what we are after, least squares only
    // serves the under-determined shapes k = 1, 2.
    let mut g = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = (0..3).map(|t| cols[i][t] * cols[j][t]).sum();
        }
        rhs[i] = (0..3).map(|t| cols[i][t] * target[t]).sum();
    }
    let q = solve_small(g, rhs)?;
    if q.iter().any(|&x| x < -1e-14) {
        return None;
    }
    let q: Vec<f64> = q.into_iter().map(|x| x.max(0.0)).collect();
    for t in 0..3 {
        let v: f64 = (0..k).map(|i| q[i] * cols[i][t]).sum();
        if (v - target[t]).abs() > 1e-12 * scale.max(1.0) {
            return None;
        }
    }
    Some(q)
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub struct LatticeModel {
    geom: Geometry64,
    declared: Declared,
    interior: StepDist,
    interior_support: Vec<(Point64, f64)>,
    columns: Vec<OnceLock<Column>>,
}

impl LatticeModel {
    pub fn new(geom: Geometry64, refl: ReflectionSpec, cov: Covariance64) -> Result<Self> {
        let support = lattice_interior_support(&cov)?;
        let max_jump = support.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
        if max_jump > geom.band_width() {
            return Err(WedgeError::Construction(format!(
                "band width {} is smaller than the longest interior jump {max_jump}; interior jumps could leave D",
                geom.band_width()
            )));
        }
        let entries: Vec<((i8, i8), f64)> = support
            .iter()
            .map(|(v, p)| ((v.x1 as i8, v.x2 as i8), *p))
            .collect();
        Ok(LatticeModel {
            geom,
            declared: Declared {
                cov,
                reflection: refl,
                moment_p: 4.0,
            },
            interior: StepDist::from_weights(&entries),
            interior_support: support,
            columns: (0..COLUMN_CACHE).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn with_moment_p(mut self, p: f64) -> Self {
        self.declared.moment_p = p;
        self
    }

    pub fn interior_support(&self) -> &[(Point64, f64)] {
        &self.interior_support
    }

    fn contains_int(&self, x1: i64, x2: i64) -> bool {
        self.geom.contains(Point::new(x1 as f64, x2 as f64))
    }

    fn with_column<T>(&self, x1: i64, f: impl FnOnce(&Column) -> T) -> T {
        if (x1 as usize) < COLUMN_CACHE {
            f(self.columns[x1 as usize].get_or_init(|| self.build_column(x1)))
        } else {
            f(&self.build_column(x1))
        }
    }

    /// `(bottom, top)` of column `x1`.
    fn extent(&self, x1: i64) -> (i64, i64) {
        let xf = x1 as f64;
        let mut top = self.geom.height(xf, Side::Upper).floor() as i64;
        while !self.contains_int(x1, top) {
            top -= 1;
        }
        while self.contains_int(x1, top + 1) {
            top += 1;
        }
        let mut bottom = -(self.geom.height(xf, Side::Lower).floor() as i64);
        while !self.contains_int(x1, bottom) {
            bottom += 1;
        }
        while self.contains_int(x1, bottom - 1) {
            bottom -= 1;
        }
        (bottom, top)
    }

    fn build_column(&self, x1: i64) -> Column {
        let (bottom, top) = self.extent(x1);
        let (int_lo, int_hi) = self.interior_interval(x1, bottom, top);
        let bands = if int_lo <= int_hi {
            vec![(bottom, int_lo - 1), (int_hi + 1, top)]
        } else {
            vec![(bottom, top)]
        };
        let mut segments = vec![];
        if x1 as f64 > self.geom.band_width() {
            // Away from the wall the target mean depends on the row only through
            // its side, and the admissible steps only through where the row sits
            // relative to the extents of the three neighbouring columns.
            let mut cuts = vec![0, 1];
            for d in -1..=1 {
                let (b, t) = self.extent(x1 + d);
                cuts.extend((-1..=2).flat_map(|e| [b + e, t + e]));
            }
            for (lo, hi) in bands {
                let mut starts: Vec<i64> = cuts.iter().copied().filter(|&c| lo < c && c <= hi).collect();
                starts.push(lo);
                starts.sort_unstable();
                starts.dedup();
                segments.extend(starts.into_iter().map(|r| (r, self.boundary_dist(x1, r))));
            }
        } else if top - bottom < ROW_CACHE {
            for (lo, hi) in bands {
                segments.extend((lo..=hi).map(|r| (r, self.boundary_dist(x1, r))));
            }
        }
        Column {
            top,
            bottom,
            int_lo,
            int_hi,
            segments,
        }
    }

    fn is_interior(&self, x1: i64, x2: i64) -> bool {
        self.geom.classify(Point::new(x1 as f64, x2 as f64)) == Region::Interior
    }

    /// The interior points of a column form an interval: the distance to the
    /// region above the upper curve is nonincreasing in `x2`, the distance to the
    /// region below the lower curve nondecreasing.
    fn interior_interval(&self, x1: i64, bottom: i64, top: i64) -> (i64, i64) {
        let xf = x1 as f64;
        if xf <= self.geom.band_width() || top - bottom < 2 {
            return (1, 0);
        }
        let gap = |x2: i64| {
            let p = Point::new(xf, x2 as f64);
            self.geom.curve_distance(p, Side::Upper) - self.geom.curve_distance(p, Side::Lower)
        };
        // Last x2 with d_upper >= d_lower: where min(d_upper, d_lower) peaks.
        let (mut lo, mut hi) = (bottom, top);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if gap(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let Some(c) = [lo, hi].into_iter().find(|&c| self.is_interior(x1, c)) else {
            return (1, 0);
        };
        let (mut a, mut b) = (c, top);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if self.is_interior(x1, mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        let int_hi = if self.is_interior(x1, b) { b } else { a };
        let (mut a, mut b) = (bottom, c);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if self.is_interior(x1, mid) {
                b = mid;
            } else {
                a = mid;
            }
        }
        let int_lo = if self.is_interior(x1, a) { a } else { b };
        (int_lo, int_hi)
    }

    fn boundary_dist(&self, x1: i64, x2: i64) -> StepDist {
        let x = Point::new(x1 as f64, x2 as f64);
        let side = if x2 >= 0 { Side::Upper } else { Side::Lower };
        let refl = &self.declared.reflection;
        let target = boundary_direction(&self.geom, x, side, refl.alpha) * refl.mu(side);
        let mut steps = vec![];
        let mut offsets = vec![];
        for i in -1i64..=1 {
            for j in -1i64..=1 {
                if self.contains_int(x1 + i, x2 + j) {
                    steps.push(Point::new(i as f64, j as f64));
                    offsets.push((i as i8, j as i8));
                }
            }
        }
        let t = feasible_fraction(&steps, target);
        let mut weights = None;
        for shrink in [1.0, 1.0 - 1e-12, 1.0 - 1e-9, 1.0 - 1e-6] {
            if let Some((w, _)) = min_norm_weights(&steps, target * (t * shrink)) {
                weights = Some(w);
                break;
            }
        }
        let w = weights.expect("the origin is always an admissible step, so a scaled target is feasible");
        let entries: Vec<((i8, i8), f64)> = offsets.into_iter().zip(w).collect();
        StepDist::from_weights(&entries)
    }

    /// Integer coordinates of a lattice state with `x1 ≥ 0`.
    #[inline]
    fn lattice_coords(x: Point64) -> Option<(i64, i64)> {
        let (x1, x2) = (x.x1 as i64, x.x2 as i64);
        (x.x1 >= 0.0 && x1 as f64 == x.x1 && x2 as f64 == x.x2).then_some((x1, x2))
    }

    /// Region at `x` and `f` applied to its step law; `None` off the lattice.
    #[inline]
    fn with_law<T>(&self, x: Point64, f: impl FnOnce(Region, &StepDist) -> T) -> Option<T> {
        let (x1, x2) = Self::lattice_coords(x)?;
        Some(self.with_column(x1, |col| {
            if x2 < col.bottom || x2 > col.top {
                return f(Region::Outside, &self.interior);
            }
            if col.int_lo <= x2 && x2 <= col.int_hi {
                return f(Region::Interior, &self.interior);
            }
            let region = if x2 >= 0 { Region::BoundaryUpper } else { Region::BoundaryLower };
            match col.segment(x2) {
                Some(d) => f(region, d),
                None => f(region, &self.boundary_dist(x1, x2)),
            }
        }))
    }

    fn draw(&self, x: Point64, rng: &mut WalkRng) -> Point64 {
        let u = rng.gen::<f64>();
        let (a, b) = self
            .with_law(x, |_, d| d.sample(u))
            .expect("lattice model sampled off the lattice");
        Point::new(a as f64, b as f64)
    }
}

impl IncrementModel for LatticeModel {
    fn name(&self) -> &'static str {
        "lattice"
    }

    fn geometry(&self) -> &Geometry64 {
        &self.geom
    }

    fn declared(&self) -> &Declared {
        &self.declared
    }

    fn region(&self, x: Point64) -> Region {
        self.with_law(x, |r, _| r).unwrap_or_else(|| self.geom.classify(x))
    }

    /// States are the lattice points of the wedge.
    fn contains(&self, x: Point64) -> bool {
        match Self::lattice_coords(x) {
            Some((x1, x2)) => self.with_column(x1, |c| c.bottom <= x2 && x2 <= c.top),
            None => false,
        }
    }

    fn sample_increment(&self, x: Point64, _region: Region, rng: &mut WalkRng) -> Point64 {
        self.draw(x, rng)
    }

    fn step(&self, x: Point64, rng: &mut WalkRng) -> Point64 {
        x + self.draw(x, rng)
    }

    fn is_symmetric(&self, x: Point64, region: Region) -> bool {
        let _ = x;
        region == Region::Interior
    }

    fn support(&self, x: Point64) -> Option<Vec<(Point64, f64)>> {
        self.with_law(x, |r, d| (r != Region::Outside).then(|| d.entries()))?
    }
}
