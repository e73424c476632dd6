//! Exact lattice arithmetic on the dyadic values of `f64` slopes.
//!
//! Chunk rows are bounded by `ceil(y·t + c)` for float slopes `t`; evaluating
//! these on the exact binary value of `t` keeps every counting routine and the
//! point-by-point enumeration in agreement at any height.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact `(m, e)` with `x = m·2^e` and `m` odd (or zero).
pub fn decode(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & 0x000f_ffff_ffff_ffff) as i64;
    let (mut m, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    let tz = m.trailing_zeros() as i32;
    m >>= tz;
    e += tz;
    (sign * m, e)
}

fn big_lin(y: i64, t: f64, c: f64) -> (BigInt, u32) {
    let (mt, et) = decode(t);
    let (mc, ec) = decode(c);
    let e = et.min(ec).min(0);
    let a = BigInt::from(y) * BigInt::from(mt) * (BigInt::one() << (et - e) as u32);
    let b = BigInt::from(mc) * (BigInt::one() << (ec - e) as u32);
    (a + b, (-e) as u32)
}

fn fast_lin(y: i64, t: f64, c: f64) -> Option<(i128, u32)> {
    let (mt, et) = decode(t);
    let (mc, ec) = decode(c);
    let (et, ec) = (if mt == 0 { ec } else { et }, if mc == 0 { et } else { ec });
    let e = et.min(ec).min(0);
    let sa = (et - e) as u32;
    let sb = (ec - e) as u32;
    let a = (y as i128).checked_mul(mt as i128)?;
    let a = checked_shl(a, sa)?;
    let b = checked_shl(mc as i128, sb)?;
    let s = a.checked_add(b)?;
    let k = (-e) as u32;
    if k >= 126 {
        return None;
    }
    Some((s, k))
}

fn checked_shl(v: i128, s: u32) -> Option<i128> {
    if v == 0 {
        return Some(0);
    }
    if s >= 126 || v.unsigned_abs().leading_zeros() <= s + 1 {
        return None;
    }
    Some(v << s)
}

/// `floor(y·t + c)` evaluated exactly.
pub fn floor_lin(y: i64, t: f64, c: f64) -> i64 {
    if let Some((s, k)) = fast_lin(y, t, c) {
        return (s >> k) as i64;
    }
    let (s, k) = big_lin(y, t, c);
    let d = BigInt::one() << k;
    s.div_floor(&d).to_i64().expect("row bound fits i64")
}

/// `ceil(y·t + c)` evaluated exactly.
pub fn ceil_lin(y: i64, t: f64, c: f64) -> i64 {
    if let Some((s, k)) = fast_lin(y, t, c) {
        return -((-s) >> k) as i64;
    }
    let (s, k) = big_lin(y, t, c);
    let d = BigInt::one() << k;
    -((-s).div_floor(&d)).to_i64().expect("row bound fits i64")
}

/// Exact rational `num / 2^k` equal to a float.
#[derive(Clone, Debug)]
pub struct Dyadic {
    pub num: BigInt,
    pub shift: u32,
}

impl Dyadic {
    pub fn of(x: f64) -> Self {
        let (m, e) = decode(x);
        if e >= 0 {
            Dyadic {
                num: BigInt::from(m) << e as u32,
                shift: 0,
            }
        } else {
            Dyadic {
                num: BigInt::from(m),
                shift: (-e) as u32,
            }
        }
    }

    pub fn den(&self) -> BigInt {
        BigInt::one() << self.shift
    }

    /// `floor(y · self)`.
    pub fn floor_mul(&self, y: &BigInt) -> BigInt {
        (y * &self.num).div_floor(&self.den())
    }

    /// Smallest integer `y` with `y · self ≥ c`, for a positive slope.
    pub fn min_y_reaching(&self, c: &BigInt) -> BigInt {
        debug_assert!(self.num.is_positive());
        let p = c * self.den();
        let (q, r) = p.div_mod_floor(&self.num);
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    }
}

/// `Σ_{i=0}^{n-1} floor((a·i + b) / m)` for `m > 0`, `n ≥ 0`.
pub fn floor_sum(n: &BigInt, m: &BigInt, a: &BigInt, b: &BigInt) -> BigInt {
    assert!(m.is_positive(), "modulus must be positive");
    if !n.is_positive() {
        return BigInt::zero();
    }
    let two = BigInt::from(2);
    let tri = n * (n - 1) / &two;
    let mut ans = BigInt::zero();
    let (mut a, mut b) = (a.clone(), b.clone());
    if a.sign() == Sign::Minus {
        let a2 = a.mod_floor(m);
        ans -= &tri * ((&a2 - &a) / m);
        a = a2;
    }
    if b.sign() == Sign::Minus {
        let b2 = b.mod_floor(m);
        ans -= n * ((&b2 - &b) / m);
        b = b2;
    }
    ans + floor_sum_unsigned(n.clone(), m.clone(), a, b)
}

fn floor_sum_unsigned(mut n: BigInt, mut m: BigInt, mut a: BigInt, mut b: BigInt) -> BigInt {
    let two = BigInt::from(2);
    let mut ans = BigInt::zero();
    loop {
        if a >= m {
            ans += (&n * (&n - 1) / &two) * (&a / &m);
            a %= &m;
        }
        if b >= m {
            ans += &n * (&b / &m);
            b %= &m;
        }
        let y_max = &a * &n + &b;
        if y_max < m {
            break;
        }
        n = &y_max / &m;
        b = &y_max % &m;
        std::mem::swap(&mut m, &mut a);
    }
    ans
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_floor_sum(n: i64, m: i64, a: i64, b: i64) -> i64 {
        (0..n).map(|i| (a * i + b).div_euclid(m)).sum()
    }

    #[test]
    fn decode_round_trips() {
        for x in [0.25f64, -0.255_341_921_221_036_3, 1e-30, 3.0, 0.5] {
            let (m, e) = decode(x);
            assert_eq!(m as f64 * 2f64.powi(e), x);
        }
    }

    #[test]
    fn lin_rounding_at_integers() {
        assert_eq!(ceil_lin(4, 0.25, 0.0), 1);
        assert_eq!(floor_lin(4, 0.25, 0.0), 1);
        assert_eq!(ceil_lin(5, 0.25, 0.0), 2);
        assert_eq!(floor_lin(5, 0.25, 0.0), 1);
        assert_eq!(ceil_lin(4, 0.25, -0.5), 1);
        assert_eq!(ceil_lin(6, -0.25, 0.5), -1);
        assert_eq!(ceil_lin(3, 1e-30, 0.0), 1);
        assert_eq!(floor_lin(3, -1e-30, 0.0), -1);
    }

    #[test]
    fn chunk_one_left_edge() {
        assert_eq!(ceil_lin(100, -(0.25f64).tan(), 0.0), -25);
    }

    proptest! {
        #[test]
        fn lin_matches_big_path(y in -(1i64 << 50)..(1i64 << 50), t in -4.0f64..4.0, c in -2.0f64..2.0) {
            let (s, k) = big_lin(y, t, c);
            let d = BigInt::one() << k;
            prop_assert_eq!(BigInt::from(floor_lin(y, t, c)), s.div_floor(&d));
            prop_assert_eq!(BigInt::from(ceil_lin(y, t, c)), -((-s).div_floor(&d)));
        }

        #[test]
        fn lin_close_to_float(y in -(1i64 << 20)..(1i64 << 20), t in -4.0f64..4.0) {
            let v = y as f64 * t;
            prop_assert!((floor_lin(y, t, 0.0) as f64 - v.floor()).abs() <= 1.0);
        }

        #[test]
        fn floor_sum_matches_brute(n in 0i64..60, m in 1i64..50, a in -80i64..80, b in -500i64..500) {
            let got = floor_sum(&n.into(), &m.into(), &a.into(), &b.into());
            prop_assert_eq!(got, BigInt::from(brute_floor_sum(n, m, a, b)));
        }

        #[test]
        fn min_y_reaching_is_minimal(t in 0.01f64..5.0, c in -1000i64..1000) {
            let d = Dyadic::of(t);
            let y = d.min_y_reaching(&c.into());
            prop_assert!(d.num.clone() * &y >= BigInt::from(c) * d.den());
            prop_assert!(d.num.clone() * (&y - 1) < BigInt::from(c) * d.den());
        }
    }
}
