//! One level of the strip construction, in strip-aligned coordinates.
//!
//! Chunk `j` (0-based) is the block `[j·w, (j+1)·w) × [h + j·n, h + (j+1)·n)`,
//! so each vertical unit band meets exactly one chunk of the level.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct StripLevel {
    pub h: i64,
    pub n: i64,
    pub w: i64,
    pub k: i64,
}

impl StripLevel {
    pub fn top(&self) -> i64 {
        self.h + self.k * self.n
    }

    pub fn total(&self) -> u128 {
        self.k as u128 * self.w as u128 * self.n as u128
    }

    /// Points in `[x0, x1) × [y0, y1)`.
    pub fn count_box(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> u128 {
        if x0 >= x1 || y0 >= y1 {
            return 0;
        }
        let jy0 = (y0.max(self.h) - self.h) / self.n;
        let jy1 = (y1.min(self.top()) - 1 - self.h).div_euclid(self.n);
        let jx0 = x0.max(0) / self.w;
        let jx1 = (x1.min(self.k * self.w) - 1).div_euclid(self.w);
        let (a, b) = (jy0.max(jx0), jy1.min(jx1).min(self.k - 1));
        let mut total = 0u128;
        for j in a.max(0)..=b {
            let cx = (x1.min((j + 1) * self.w) - x0.max(j * self.w)).max(0);
            let base = self.h + j * self.n;
            let cy = (y1.min(base + self.n) - y0.max(base)).max(0);
            total += cx as u128 * cy as u128;
        }
        total
    }

    pub fn points_in_box(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for j in 0..self.k {
            let base = self.h + j * self.n;
            for y in base.max(y0)..(base + self.n).min(y1) {
                for x in (j * self.w).max(x0)..((j + 1) * self.w).min(x1) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn points(&self) -> Vec<(i64, i64)> {
        self.points_in_box(0, self.k * self.w, self.h, self.top())
    }

    /// Points in the vertical band `[c, c + 1)` for an integer-aligned or
    /// real `c`.
    pub fn band_slice(&self, c: f64) -> Vec<(i64, i64)> {
        let x = c.ceil() as i64;
        if (x as f64) >= c + 1.0 || x < 0 || x >= self.k * self.w {
            return Vec::new();
        }
        let j = x / self.w;
        let base = self.h + j * self.n;
        (base..base + self.n).map(|y| (x, y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn every_band_meets_one_chunk() {
        let s = StripLevel {
            h: 20,
            n: 3,
            w: 2,
            k: 5,
        };
        for v in -10..0 {
            let sl = s.band_slice(-(v as f64) - 1.0);
            assert_eq!(sl.len(), 3);
            assert!(sl.iter().all(|p| p.0 == -v - 1));
        }
        assert!(s.band_slice(10.0).is_empty());
        assert_eq!(s.band_slice(-0.5).len(), 3);
        assert_eq!(s.total(), 30);
    }

    proptest! {
        #[test]
        fn counts_match_enumeration(x0 in -5i64..15, y0 in 10i64..40, side in 1i64..30) {
            let s = StripLevel { h: 20, n: 3, w: 2, k: 5 };
            prop_assert_eq!(
                s.count_box(x0, x0 + side, y0, y0 + side),
                s.points_in_box(x0, x0 + side, y0, y0 + side).len() as u128
            );
        }
    }
}
