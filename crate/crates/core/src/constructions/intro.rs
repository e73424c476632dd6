//! Filled annular bands of the cone: all lattice points `(x, y)` with
//! `|x| ≤ y·tan(θ/2)` and `y` in `[Y, Y + N)`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::geometry::Tube;
use crate::lattice::{floor_sum, Dyadic};

#[derive(Clone, Debug, Serialize)]
pub struct BandLevel {
    #[serde(serialize_with = "ser_big")]
    pub y0: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub rows: BigInt,
    pub tan_half: f64,
    #[serde(skip)]
    tan: Dyadic,
}

fn ser_big<S: serde::Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Row count `min(B1, F) + min(−B0, F) + 1` written as `α·F + β` on an
/// inclusive F-range (`fb = None` means unbounded).
struct Piece {
    fa: BigInt,
    fb: Option<BigInt>,
    alpha: i32,
    beta: BigInt,
}

impl BandLevel {
    pub fn new(y0: BigInt, rows: BigInt, tan_half: f64) -> Self {
        BandLevel {
            y0,
            rows,
            tan_half,
            tan: Dyadic::of(tan_half),
        }
    }

    pub fn top(&self) -> BigInt {
        &self.y0 + &self.rows
    }

    /// `⌊y·tan(θ/2)⌋`.
    pub fn half_width(&self, y: &BigInt) -> BigInt {
        self.tan.floor_mul(y)
    }

    /// `Σ_{y ∈ [y1, y2)} ⌊y·t⌋`.
    fn sum_f(&self, y1: &BigInt, y2: &BigInt) -> BigInt {
        if y2 <= y1 {
            return BigInt::zero();
        }
        floor_sum(&(y2 - y1), &self.tan.den(), &self.tan.num, &(&self.tan.num * y1))
    }

    fn y_reaching(&self, f: &BigInt) -> BigInt {
        if !f.is_positive() {
            return BigInt::zero();
        }
        self.tan.min_y_reaching(f)
    }

    /// Points in `[x0, x1) × [y0, y1)`.
    pub fn count_box(&self, x0: &BigInt, x1: &BigInt, y0: &BigInt, y1: &BigInt) -> BigInt {
        let ya = y0.max(&self.y0).clone();
        let yb = y1.min(&self.top()).clone();
        if ya >= yb || x0 >= x1 {
            return BigInt::zero();
        }
        let p1 = x1 - 1;
        let p2 = -x0;
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let zero = BigInt::zero();
        let one = BigInt::one();
        let mut pieces = Vec::new();
        if !lo.is_negative() {
            pieces.push(Piece {
                fa: zero.clone(),
                fb: Some(lo.clone()),
                alpha: 2,
                beta: one.clone(),
            });
        }
        let start2: BigInt = (&lo + 1i32).max(-&lo).max(zero.clone());
        pieces.push(Piece {
            fa: start2,
            fb: Some(hi.clone()),
            alpha: 1,
            beta: &lo + 1i32,
        });
        pieces.push(Piece {
            fa: (&hi + 1i32).max(zero),
            fb: None,
            alpha: 0,
            beta: &lo + &hi + 1i32,
        });
        let mut total = BigInt::zero();
        for p in pieces {
            if let Some(fb) = &p.fb {
                if fb < &p.fa {
                    continue;
                }
            }
            let s = self.y_reaching(&p.fa).max(ya.clone());
            let e = match &p.fb {
                Some(fb) => self.y_reaching(&(fb + 1)).min(yb.clone()),
                None => yb.clone(),
            };
            if e <= s {
                continue;
            }
            let len = &e - &s;
            if p.alpha != 0 {
                total += self.sum_f(&s, &e) * p.alpha;
            }
            total += len * &p.beta;
        }
        total
    }

    /// Total number of band points.
    pub fn total(&self) -> BigInt {
        let f = self.half_width(&self.top()) + 2;
        self.count_box(&-&f, &f, &self.y0, &self.top())
    }

    /// Row-by-row enumeration of the points in a box; `None` when the band
    /// does not fit machine integers.
    pub fn points_in_box(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> Option<Vec<(i64, i64)>> {
        let by0 = self.y0.to_i64()?;
        let by1 = self.top().to_i64()?;
        let mut out = Vec::new();
        for y in y0.max(by0)..y1.min(by1) {
            let f = self.half_width(&y.into()).to_i64()?;
            for x in x0.max(-f)..=(x1 - 1).min(f) {
                out.push((x, y));
            }
        }
        Some(out)
    }

    /// Band points inside a tube, when the band is small enough to scan.
    pub fn slice(&self, tube: &Tube) -> Option<Vec<(i64, i64)>> {
        let by0 = self.y0.to_i64().filter(|&v| v < 1 << 50)?;
        let rows = self.rows.to_i64().filter(|&v| v <= 1 << 22)?;
        let mut out = Vec::new();
        for y in by0..by0 + rows {
            let f = self.half_width(&y.into()).to_i64()?;
            let (xa, xb) = tube.x_range_at(y as f64);
            let from = (-f).max(xa.floor() as i64 - 1);
            let to = f.min(xb.ceil() as i64 + 1);
            for x in from..=to {
                if tube.contains((x as f64, y as f64)) {
                    out.push((x, y));
                }
            }
        }
        Some(out)
    }

    /// Bounds `[lo, hi]` on the slice size and the side of a box covering
    /// the slice, from the tube's cross-section length per row.
    pub fn slice_interval(&self, tube: &Tube) -> (f64, f64, f64) {
        let rows = self.rows.to_f64().unwrap_or(f64::INFINITY);
        let ya = self.y0.to_f64().unwrap_or(f64::INFINITY);
        let yb = ya + rows;
        let (len, tan_dir) = match tube {
            Tube::Vertical { .. } => (1.0, 0.0),
            Tube::Sloped { u, .. } => ((1.0 + u * u).sqrt(), -1.0 / u),
        };
        let inside = |y: f64| {
            let (a, b) = tube.x_range_at(y);
            a >= -y * self.tan_half + 1.0 && b <= y * self.tan_half - 1.0
        };
        let outside = |y: f64| {
            let (a, b) = tube.x_range_at(y);
            b < -y * self.tan_half - 1.0 || a > y * self.tan_half + 1.0
        };
        let side = rows.max((rows * tan_dir.abs() + len).ceil()).max(2.0);
        if outside(ya) && outside(yb) && tube.x_range_at(ya).0.signum() == tube.x_range_at(yb).0.signum() {
            return (0.0, 0.0, side);
        }
        if inside(ya) && inside(yb) {
            return (rows * len.floor(), rows * len.ceil(), side);
        }
        (0.0, rows * len.ceil(), side)
    }

    /// Base-row span `[−F, F]` as `(left edge, width)`.
    pub fn base_row(&self) -> (BigInt, BigInt) {
        let f = self.half_width(&self.y0);
        (-&f, 2 * f + 1)
    }
}

/// `2^(2^e)` as a big integer.
pub fn tower2(e: u32) -> BigInt {
    BigInt::one() << (1usize << e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_total(y0: i64, rows: i64, t: f64) -> i64 {
        (y0..y0 + rows).map(|y| 2 * (y as f64 * t).floor() as i64 + 1).sum()
    }

    #[test]
    fn band_k2_total() {
        let t = 0.1f64.tan();
        let b = BandLevel::new(tower2(3), tower2(2), t);
        assert_eq!(b.y0, BigInt::from(256));
        assert_eq!(b.rows, BigInt::from(16));
        assert_eq!(b.total(), BigInt::from(brute_total(256, 16, t)));
    }

    #[test]
    fn band_k1_bounds() {
        let t = 0.1f64.tan();
        let b = BandLevel::new(tower2(2), tower2(1), t);
        let total = b.total().to_i64().unwrap();
        assert!((12..=20).contains(&total));
        assert_eq!(total, brute_total(16, 4, t));
    }

    #[test]
    fn narrow_cone_is_axis_column() {
        let b = BandLevel::new(tower2(3), tower2(2), 1e-4);
        assert_eq!(b.total(), BigInt::from(16));
    }

    #[test]
    fn huge_band_total_close_to_area() {
        let t = 0.1f64.tan();
        let b = BandLevel::new(tower2(7), tower2(6), t);
        let got = b.total().to_f64().unwrap();
        let y0 = 2f64.powi(128);
        let n = 2f64.powi(64);
        let approx = n * (2.0 * t * (y0 + n / 2.0) + 1.0);
        assert!((got / approx - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn box_counts_match_enumeration(x0 in -80i64..60, y0 in 200i64..300, side in 1i64..90) {
            let b = BandLevel::new(tower2(3), tower2(2), 0.1f64.tan());
            let want = b.points_in_box(x0, x0 + side, y0, y0 + side).unwrap().len();
            let got = b.count_box(&x0.into(), &(x0 + side).into(), &y0.into(), &(y0 + side).into());
            prop_assert_eq!(got, BigInt::from(want));
        }
    }
}
