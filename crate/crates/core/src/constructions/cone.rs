//! One level of the cone construction in exact lattice form.
//!
//! Chunk `k` (1-based) occupies rows `y_k..y_k + n` with `y_k = h + (k−1)n`.
//! Row `y` of chunk `k` is `[L, L + W)` with `L = ⌈y·tan α_k − ε⌉`, clipped on
//! the right at `⌊y·tan(θ/2) + ε⌋`. The leftmost chunk has `tan α_1 =
//! −tan(θ/2)` exactly, so every row starts on or inside the (fattened) cone.

use std::sync::OnceLock;

use serde::Serialize;

use super::angles::{angle_sum, harmonic_k};
use crate::geometry::Tube;
use crate::lattice::{ceil_lin, floor_lin};

/// Chunk ranges at most this long are processed row by row.
const LEAF: i64 = 16;
/// Above this many chunks the leftmost point is located by search.
const SCAN_ALL: i64 = 1 << 18;
/// Half-width of the exact scan around the continuous minimum.
const SCAN_WINDOW: i64 = 1 << 15;

#[derive(Clone, Debug, Serialize)]
pub struct ConeLevel {
    pub h: i64,
    pub n: i64,
    pub w: i64,
    pub k: i64,
    pub theta: f64,
    pub eps: f64,
    /// Points per unclipped row.
    pub row_width: i64,
    tan_half: f64,
    #[serde(skip)]
    table: OnceLock<Option<Vec<f64>>>,
    #[serde(skip)]
    extremes: OnceLock<(i64, i64)>,
}

impl ConeLevel {
    pub fn new(theta: f64, eps: f64, w: u64, n: u64, h: u64) -> Self {
        let k = harmonic_k(h as f64, n as f64, w as f64, theta) as i64;
        let row_width = if eps == 0.0 {
            w as i64
        } else {
            (w as f64 + 2.0 * eps).ceil() as i64
        };
        ConeLevel {
            h: h as i64,
            n: n as i64,
            w: w as i64,
            k,
            theta,
            eps,
            row_width,
            tan_half: (theta / 2.0).tan(),
            table: OnceLock::new(),
            extremes: OnceLock::new(),
        }
    }

    /// Exclusive top row.
    pub fn top(&self) -> i64 {
        self.h + self.k * self.n
    }

    /// Base row of chunk `k`.
    pub fn base(&self, k: i64) -> i64 {
        self.h + (k - 1) * self.n
    }

    /// `tan α_k`.
    pub fn tangent(&self, k: i64) -> f64 {
        if k <= 1 {
            return -self.tan_half;
        }
        let a = angle_sum(self.h as f64, self.n as f64, self.w as f64, (k - 1) as u64);
        (a - self.theta / 2.0).tan()
    }

    pub fn tan_half(&self) -> f64 {
        self.tan_half
    }

    /// Right clip `⌊y·tan(θ/2) + ε⌋`.
    fn right_clip(&self, y: i64) -> i64 {
        floor_lin(y, self.tan_half, self.eps)
    }

    fn left(&self, y: i64, t: f64) -> i64 {
        ceil_lin(y, t, -self.eps)
    }

    /// Inclusive x-range of row `y` in a chunk with tangent `t`.
    pub fn row_span(&self, y: i64, t: f64) -> Option<(i64, i64)> {
        let l = self.left(y, t);
        let r = (l + self.row_width - 1).min(self.right_clip(y));
        (r >= l).then_some((l, r))
    }

    /// Chunk index holding row `y`, if the row belongs to the level.
    pub fn chunk_of_row(&self, y: i64) -> Option<i64> {
        (y >= self.h && y < self.top()).then(|| (y - self.h) / self.n + 1)
    }

    /// Inclusive x-range of row `y`.
    pub fn row(&self, y: i64) -> Option<(i64, i64)> {
        let k = self.chunk_of_row(y)?;
        self.row_span(y, self.tangent(k))
    }

    /// Points in `[x0, x1) × [y0, y1)`.
    pub fn count_box(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> u128 {
        let ylo = y0.max(self.h);
        let yhi = y1.min(self.top());
        if ylo >= yhi || x0 >= x1 {
            return 0;
        }
        let a = (ylo - self.h) / self.n + 1;
        let b = (yhi - 1 - self.h) / self.n + 1;
        let tans = Tangents::of(self);
        let (lo, hi) = self.x_extremes();
        // Boxes spanning the level's width reduce to a row count, which the
        // recursion resolves without following the left boundary.
        let bx = if x0 <= lo && x1 > hi {
            (i64::MIN / 4, i64::MAX / 4)
        } else {
            (x0, x1)
        };
        self.count_range(&tans, a, b, bx, (ylo, yhi))
    }

    fn rows_of(&self, a: i64, b: i64, by: (i64, i64)) -> (i64, i64) {
        (self.base(a).max(by.0), (self.base(b) + self.n - 1).min(by.1 - 1))
    }

    /// Bounds on left edges and unclipped right edges over chunks `a..=b`
    /// restricted to rows `ylo..=yhi`.
    fn span_bounds(&self, ta: f64, tb: f64, ylo: i64, yhi: i64) -> (i64, i64) {
        let lmin = self.left(ylo, ta).min(self.left(yhi, ta));
        let lmax = self.left(ylo, tb).max(self.left(yhi, tb));
        (lmin, lmax + self.row_width - 1)
    }

    /// Whether some row in `ylo..=yhi` of a chunk with tangent at most `tb`
    /// reaches the right clip. The gap `clip(y) − L(y)` is linear in `y`
    /// up to one unit of rounding, so the endpoints decide it with a unit of
    /// slack.
    fn may_clip(&self, tb: f64, ylo: i64, yhi: i64) -> bool {
        [ylo, yhi]
            .iter()
            .any(|&y| self.left(y, tb) + self.row_width - 1 > self.right_clip(y) - 1)
    }

    fn count_range(&self, tans: &Tangents, a: i64, b: i64, bx: (i64, i64), by: (i64, i64)) -> u128 {
        let (ylo, yhi) = self.rows_of(a, b, by);
        if ylo > yhi {
            return 0;
        }
        if b - a < LEAF {
            let mut total = 0u128;
            for k in a..=b {
                let t = tans.get(self, k);
                let (r0, r1) = self.rows_of(k, k, by);
                for y in r0..=r1 {
                    if let Some((l, r)) = self.row_span(y, t) {
                        let lo = l.max(bx.0);
                        let hi = r.min(bx.1 - 1);
                        if hi >= lo {
                            total += (hi - lo + 1) as u128;
                        }
                    }
                }
            }
            return total;
        }
        let (lmin, rmax) = self.span_bounds(tans.get(self, a), tans.get(self, b), ylo, yhi);
        if rmax < bx.0 || lmin >= bx.1 {
            return 0;
        }
        let clipped = self.may_clip(tans.get(self, b), ylo, yhi);
        if !clipped && lmin >= bx.0 && rmax < bx.1 {
            return (yhi - ylo + 1) as u128 * self.row_width as u128;
        }
        let mid = a + (b - a) / 2;
        self.count_range(tans, a, mid, bx, by) + self.count_range(tans, mid + 1, b, bx, by)
    }

    /// Total number of points.
    pub fn total(&self) -> u128 {
        self.count_box(i64::MIN / 4, i64::MAX / 4, self.h, self.top())
    }

    /// All points in `[x0, x1) × [y0, y1)`, row by row.
    pub fn points_in_box(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for y in y0.max(self.h)..y1.min(self.top()) {
            if let Some((l, r)) = self.row(y) {
                for x in l.max(x0)..=r.min(x1 - 1) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Every point of the level.
    pub fn points(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for k in 1..=self.k {
            let t = self.tangent(k);
            for y in self.base(k)..self.base(k) + self.n {
                if let Some((l, r)) = self.row_span(y, t) {
                    out.extend((l..=r).map(|x| (x, y)));
                }
            }
        }
        out
    }

    /// Smallest left edge among the rows of chunk `k`.
    fn chunk_min_left(&self, k: i64, t: f64) -> i64 {
        let y = if t < 0.0 {
            self.base(k) + self.n - 1
        } else {
            self.base(k)
        };
        self.left(y, t)
    }

    /// `(x_min, x_max)`, computed once.
    pub fn x_extremes(&self) -> (i64, i64) {
        *self.extremes.get_or_init(|| (self.find_x_min(), self.find_x_max()))
    }

    /// Smallest x-coordinate of the level.
    pub fn x_min(&self) -> i64 {
        self.x_extremes().0
    }

    /// Largest x-coordinate of the level.
    pub fn x_max(&self) -> i64 {
        self.x_extremes().1
    }

    fn find_x_min(&self) -> i64 {
        if self.k <= SCAN_ALL {
            return (1..=self.k)
                .map(|k| self.chunk_min_left(k, self.tangent(k)))
                .min()
                .expect("level has chunks");
        }
        let g = |k: i64| {
            let t = self.tangent(k);
            let y = if t < 0.0 {
                self.base(k) + self.n - 1
            } else {
                self.base(k)
            };
            y as f64 * t
        };
        let (mut lo, mut hi) = (1i64, self.k);
        while hi - lo > 2 {
            let m1 = lo + (hi - lo) / 3;
            let m2 = hi - (hi - lo) / 3;
            if g(m1) <= g(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let from = (lo - SCAN_WINDOW).max(1);
        let to = (hi + SCAN_WINDOW).min(self.k);
        let mut best = self.chunk_min_left(1, self.tangent(1));
        for k in from..=to {
            best = best.min(self.chunk_min_left(k, self.tangent(k)));
        }
        best
    }

    fn find_x_max(&self) -> i64 {
        let mut best = i64::MIN;
        for k in (self.k - 4).max(1)..=self.k {
            let t = self.tangent(k);
            for y in [self.base(k), self.base(k) + self.n - 1] {
                if let Some((_, r)) = self.row_span(y, t) {
                    best = best.max(r);
                }
            }
        }
        best
    }

    /// Level points inside a tube.
    pub fn slice(&self, tube: &Tube) -> Vec<(i64, i64)> {
        let tans = Tangents::of(self);
        let mut out = Vec::new();
        self.slice_range(&tans, 1, self.k, tube, &mut out);
        out.sort_unstable_by_key(|p| (p.1, p.0));
        out
    }

    fn slice_range(&self, tans: &Tangents, a: i64, b: i64, tube: &Tube, out: &mut Vec<(i64, i64)>) {
        let ylo = self.base(a);
        let yhi = self.base(b) + self.n - 1;
        let (lmin, rmax) = self.span_bounds(tans.get(self, a), tans.get(self, b), ylo, yhi);
        if !tube.may_meet_rect(lmin as f64 - 1.0, rmax as f64 + 1.0, ylo as f64 - 1.0, yhi as f64 + 1.0) {
            return;
        }
        if b - a >= LEAF {
            let mid = a + (b - a) / 2;
            self.slice_range(tans, a, mid, tube, out);
            self.slice_range(tans, mid + 1, b, tube, out);
            return;
        }
        for k in a..=b {
            let t = tans.get(self, k);
            for y in self.base(k)..self.base(k) + self.n {
                let Some((l, r)) = self.row_span(y, t) else { continue };
                let (xa, xb) = tube.x_range_at(y as f64);
                let from = l.max((xa.floor() as i64).saturating_sub(1));
                let to = r.min((xb.ceil() as i64).saturating_add(1));
                for x in from..=to {
                    if tube.contains((x as f64, y as f64)) {
                        out.push((x, y));
                    }
                }
            }
        }
    }
}

/// Tangent lookup; small levels are tabulated once per level.
struct Tangents<'a> {
    table: Option<&'a [f64]>,
}

impl<'a> Tangents<'a> {
    fn of(level: &'a ConeLevel) -> Self {
        let table = level
            .table
            .get_or_init(|| (level.k <= 1 << 20).then(|| (0..=level.k).map(|k| level.tangent(k)).collect()));
        Tangents {
            table: table.as_deref(),
        }
    }

    fn get(&self, level: &ConeLevel, k: i64) -> f64 {
        match self.table {
            Some(t) => t[k as usize],
            None => level.tangent(k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn level1() -> ConeLevel {
        ConeLevel::new(0.5, 0.0, 2, 2, 100)
    }

    #[test]
    fn first_chunk_example() {
        let c = level1();
        assert_eq!(c.row(100), Some((-25, -24)));
        assert_eq!(c.base(1), 100);
        assert_eq!(c.top(), 100 + c.k * 2);
    }

    #[test]
    fn every_point_in_the_closed_cone() {
        for eps in [0.0, 0.5] {
            let c = ConeLevel::new(0.5, eps, 2, 3, 1660);
            for (x, y) in c.points() {
                assert!((x as f64).abs() <= y as f64 * c.tan_half() + eps + 1e-9);
            }
        }
    }

    #[test]
    fn rows_are_disjoint_unions_of_width_w_segments() {
        let c = level1();
        for k in 1..=c.k {
            let t = c.tangent(k);
            for y in c.base(k)..c.base(k) + c.n {
                if let Some((l, r)) = c.row_span(y, t) {
                    assert!(r - l < c.w);
                }
            }
        }
    }

    #[test]
    fn fattened_edges_separated_by_w() {
        let c = ConeLevel::new(0.5, 0.5, 2, 4, 35140);
        for k in 1..c.k {
            let y = c.base(k + 1);
            let l0 = c.left(y, c.tangent(k));
            let l1 = c.left(y, c.tangent(k + 1));
            assert!(l1 - l0 >= c.w, "k={k}");
        }
    }

    #[test]
    fn recursion_matches_row_scan_on_full_level() {
        for eps in [0.0, 0.5] {
            let c = ConeLevel::new(0.5, eps, 2, 3, 1660);
            assert_eq!(c.total(), c.points().len() as u128);
        }
    }

    #[test]
    fn x_extremes_match_points() {
        for (n, h) in [(2u64, 100u64), (3, 1660), (9, 500)] {
            let c = ConeLevel::new(0.5, 0.5, 2, n, h);
            let pts = c.points();
            assert_eq!(c.x_min(), pts.iter().map(|p| p.0).min().unwrap());
            assert_eq!(c.x_max(), pts.iter().map(|p| p.0).max().unwrap());
        }
    }

    #[test]
    fn slice_matches_brute_force() {
        let c = ConeLevel::new(0.5, 0.5, 2, 3, 1660);
        let pts = c.points();
        for phi in [-0.2, -0.05, 0.0, 0.11, 0.24, 0.4] {
            let t = Tube::at_angle(phi);
            let want: Vec<_> = {
                let mut v: Vec<_> = pts
                    .iter()
                    .copied()
                    .filter(|&(x, y)| t.contains((x as f64, y as f64)))
                    .collect();
                v.sort_unstable_by_key(|p| (p.1, p.0));
                v
            };
            assert_eq!(c.slice(&t), want, "phi={phi}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn box_counts_match_enumeration(
            x0 in -600i64..400, y0 in 1500i64..4000, side in 1i64..1500, eps in prop::bool::ANY
        ) {
            let c = ConeLevel::new(0.5, if eps { 0.5 } else { 0.0 }, 2, 3, 1660);
            let n = c.count_box(x0, x0 + side, y0, y0 + side);
            prop_assert_eq!(n, c.points_in_box(x0, x0 + side, y0, y0 + side).len() as u128);
        }

        #[test]
        fn left_edges_inside_cone(k in 1i64..2000, dy in 0i64..4) {
            let c = ConeLevel::new(0.5, 0.0, 2, 4, 35140);
            let k = k.min(c.k);
            let y = c.base(k) + dy;
            let l = c.left(y, c.tangent(k));
            prop_assert!(l as f64 >= -(y as f64) * c.tan_half() - 1e-9);
        }
    }
}
