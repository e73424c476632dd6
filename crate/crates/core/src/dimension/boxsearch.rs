//! Densest axis-aligned box of a fixed side over a finite point set.

use super::DimensionError;
use crate::constructions::PointSet;

/// Segment tree over anchor rows: range add, max with leftmost argmax.
struct MaxTree {
    size: usize,
    max: Vec<i64>,
    arg: Vec<usize>,
    lazy: Vec<i64>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        let mut t = MaxTree {
            size,
            max: vec![0; 2 * size],
            arg: vec![0; 2 * size],
            lazy: vec![0; 2 * size],
        };
        for i in 0..size {
            t.arg[size + i] = i;
            if i >= n {
                t.max[size + i] = i64::MIN / 2;
            }
        }
        for v in (1..size).rev() {
            t.pull(v);
        }
        t
    }

    fn pull(&mut self, v: usize) {
        let (l, r) = (2 * v, 2 * v + 1);
        if self.max[l] >= self.max[r] {
            self.max[v] = self.max[l] + self.lazy[v];
            self.arg[v] = self.arg[l];
        } else {
            self.max[v] = self.max[r] + self.lazy[v];
            self.arg[v] = self.arg[r];
        }
    }

    fn add(&mut self, lo: usize, hi: usize, d: i64) {
        self.add_rec(1, 0, self.size, lo, hi, d);
    }

    fn add_rec(&mut self, v: usize, nl: usize, nr: usize, lo: usize, hi: usize, d: i64) {
        if hi <= nl || nr <= lo {
            return;
        }
        if lo <= nl && nr <= hi {
            self.max[v] += d;
            self.lazy[v] += d;
            return;
        }
        let mid = (nl + nr) / 2;
        self.add_rec(2 * v, nl, mid, lo, hi, d);
        self.add_rec(2 * v + 1, mid, nr, lo, hi, d);
        self.pull(v);
    }

    fn top(&self) -> (i64, usize) {
        (self.max[1], self.arg[1])
    }
}

fn columns(side: f64) -> Result<i64, DimensionError> {
    if !(side >= 1.0) || !side.is_finite() {
        return Err(DimensionError::InvalidParameter(format!(
            "box side must be >= 1, got {side}"
        )));
    }
    Ok(side.ceil() as i64)
}

/// Result of a box search: lower-left corner, side and point count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestBox {
    pub x0: i64,
    pub y0: i64,
    pub side: f64,
    pub count: u64,
}

/// Box `[x0, x0+side) × [y0, y0+side)` with the most points; ties go to the
/// lexicographically smallest anchor `(x0, y0)` taken from point coordinates.
pub fn max_count_box(ps: &PointSet, side: f64) -> Result<BestBox, DimensionError> {
    let s = columns(side)?;
    if ps.is_empty() {
        return Err(DimensionError::EmptySet);
    }
    let pts = ps.points();
    let mut ys: Vec<i64> = pts.iter().map(|p| p.1).collect();
    ys.sort_unstable();
    ys.dedup();
    let span = |y: i64| {
        let lo = ys.partition_point(|&a| a <= y - s);
        let hi = ys.partition_point(|&a| a <= y);
        (lo, hi)
    };
    let mut tree = MaxTree::new(ys.len());
    let mut best = BestBox {
        x0: 0,
        y0: 0,
        side,
        count: 0,
    };
    let (mut enter, mut leave) = (0usize, 0usize);
    let mut i = 0usize;
    while i < pts.len() {
        let x0 = pts[i].0;
        while leave < enter && pts[leave].0 < x0 {
            let (a, b) = span(pts[leave].1);
            tree.add(a, b, -1);
            leave += 1;
        }
        while enter < pts.len() && pts[enter].0 < x0 + s {
            let (a, b) = span(pts[enter].1);
            tree.add(a, b, 1);
            enter += 1;
        }
        let (c, arg) = tree.top();
        if c as u64 > best.count {
            best = BestBox {
                x0,
                y0: ys[arg],
                side,
                count: c as u64,
            };
        }
        while i < pts.len() && pts[i].0 == x0 {
            i += 1;
        }
    }
    Ok(best)
}

/// Quadratic reference: every anchor pair from point coordinates, counted by
/// binary search in the sorted rows of each vertical slab.
pub fn max_count_box_brute(ps: &PointSet, side: f64) -> Result<BestBox, DimensionError> {
    let s = columns(side)?;
    if ps.is_empty() {
        return Err(DimensionError::EmptySet);
    }
    let pts = ps.points();
    let mut xs: Vec<i64> = pts.iter().map(|p| p.0).collect();
    xs.dedup();
    let mut ys: Vec<i64> = pts.iter().map(|p| p.1).collect();
    ys.sort_unstable();
    ys.dedup();
    let mut best = BestBox {
        x0: 0,
        y0: 0,
        side,
        count: 0,
    };
    for &x0 in &xs {
        let mut slab: Vec<i64> = pts.iter().filter(|p| p.0 >= x0 && p.0 < x0 + s).map(|p| p.1).collect();
        slab.sort_unstable();
        for &y0 in &ys {
            let c = (slab.partition_point(|&y| y < y0 + s) - slab.partition_point(|&y| y < y0)) as u64;
            if c > best.count {
                best = BestBox { x0, y0, side, count: c };
            }
        }
    }
    Ok(best)
}
