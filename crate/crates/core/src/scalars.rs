//! Nonnegative quantities ranging from small exact integers to towers of
//! exponentials.
//!
//! A [`LogScalar`] is either an exact integer (depth 0) or the number
//! `exp(exp(...exp(r)))` with `depth` exponentiations. Heights such as
//! `e^{H}` at the third level of the exponential growth schedule are far
//! outside any machine range, but ratios of their logarithms stay finite and
//! are what the dimension estimates need.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact integers are kept up to this many bits.
pub const EXACT_BITS: u64 = 4096;
/// Largest supported depth.
pub const MAX_DEPTH: u8 = 4;

/// `ln(f64::MAX)`.
const LN_F64_MAX: f64 = 709.782_712_893_384;
/// Perturbation bound used when a term is absorbed by a value beyond `f64`.
const ABSORBED: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalarError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(&'static str),
}

pub type Result<T> = std::result::Result<T, ScalarError>;

/// Exact-or-iterated-logarithmic nonnegative number.
#[derive(Clone, Debug)]
pub struct LogScalar {
    depth: u8,
    r: f64,
    exact: Option<BigUint>,
    err: f64,
}

/// Quotient of two logarithms with an accumulated absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRatio {
    pub value: f64,
    pub error_bound: f64,
}

/// Natural log of a LogScalar: a float when it fits, otherwise itself a
/// LogScalar (whose value then exceeds `f64::MAX`).
enum Ln {
    F(f64, f64),
    S(LogScalar),
}

fn big_ln(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

impl LogScalar {
    pub const fn zero() -> Self {
        LogScalar {
            depth: 0,
            r: 0.0,
            exact: None,
            err: 0.0,
        }
    }

    pub fn one() -> Self {
        Self::from_u64(1)
    }

    pub fn from_u64(n: u64) -> Self {
        ls_make(BigUint::from(n))
    }

    /// A real value `v ≥ 1` at depth 1.
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(ScalarError::Domain("from_f64 needs a finite value >= 1"));
        }
        Ok(Self::with_ln(v.ln(), v.ln().abs() * f64::EPSILON))
    }

    /// The value `e^x` for a finite `x ≥ 0`.
    pub fn from_ln(x: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(ScalarError::Domain("from_ln needs a finite exponent >= 0"));
        }
        Ok(Self::with_ln(x, 0.0))
    }

    fn with_ln(x: f64, err: f64) -> Self {
        LogScalar {
            depth: 1,
            r: x.max(0.0),
            exact: None,
            err,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.depth == 0 && self.exact.is_none()
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn exact(&self) -> Option<&BigUint> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.depth == 0
    }

    pub fn error_bound(&self) -> f64 {
        self.err
    }

    /// True when two non-exact values agree to within their error bounds and
    /// working precision, so that their order is not determined.
    pub fn indistinct(&self, o: &LogScalar) -> bool {
        if self.depth == 0 || self.depth != o.depth {
            return false;
        }
        let slack = self.err + o.err + 4.0 * f64::EPSILON * self.r.max(o.r);
        (self.r - o.r).abs() <= slack
    }

    /// Exact value as a big integer (ZERO included).
    pub fn to_biguint(&self) -> Option<BigUint> {
        if self.depth != 0 {
            return None;
        }
        Some(self.exact.clone().unwrap_or_default())
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_biguint().and_then(|b| b.to_u64())
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.to_biguint().and_then(|b| b.to_i64())
    }

    /// Value as a float, when it fits.
    pub fn to_f64(&self) -> Option<f64> {
        match self.depth {
            0 => {
                Some(self.exact.as_ref().map_or(0.0, |e| e.to_f64().unwrap_or(f64::INFINITY))).filter(|v| v.is_finite())
            }
            1 if self.r <= LN_F64_MAX => Some(self.r.exp()),
            _ => None,
        }
    }

    /// Natural logarithm as a float, when it fits.
    pub fn ln_f64(&self) -> Option<f64> {
        match self.ln() {
            Ln::F(a, _) => Some(a),
            Ln::S(_) => None,
        }
    }

    fn ln(&self) -> Ln {
        match self.depth {
            0 => {
                let a = self.r;
                Ln::F(a, a.abs() * f64::EPSILON)
            }
            1 => Ln::F(self.r, self.err),
            d => Ln::S(LogScalar {
                depth: d - 1,
                r: self.r,
                exact: None,
                err: self.err,
            }),
        }
    }

    fn from_lnval(l: Ln) -> Result<Self> {
        match l {
            Ln::F(x, e) => {
                if !x.is_finite() {
                    return Err(ScalarError::Domain("non-finite logarithm"));
                }
                if x < 0.0 {
                    if x > -1e-12 {
                        return Ok(Self::with_ln(0.0, e + x.abs()));
                    }
                    return Err(ScalarError::Domain("value below 1 is not representable"));
                }
                Ok(Self::with_ln(x, e))
            }
            Ln::S(s) => {
                let (d, r, e) = match &s.exact {
                    Some(n) if s.depth == 0 => {
                        let r = big_ln(n);
                        (2, r, r * f64::EPSILON)
                    }
                    _ => (s.depth + 1, s.r, s.err),
                };
                canonical(d, r, e)
            }
        }
    }

    /// Compact text form: decimal for exact values, `e^x` / `e^e^x` otherwise.
    pub fn repr(&self) -> String {
        match (&self.exact, self.depth) {
            (None, 0) => "0".to_string(),
            (Some(n), 0) => {
                let s = n.to_str_radix(10);
                if s.len() <= 40 {
                    s
                } else {
                    format!("e^{}", crate::numfmt::sig12(self.r))
                }
            }
            (_, d) => format!("{}{}", "e^".repeat(d as usize), crate::numfmt::sig12(self.r)),
        }
    }
}

fn canonical(depth: u8, r: f64, err: f64) -> Result<LogScalar> {
    let (mut d, mut r, mut e) = (depth, r, err);
    while d >= 2 && r <= LN_F64_MAX {
        let nr = r.exp();
        if !nr.is_finite() {
            break;
        }
        e = if e == 0.0 { 0.0 } else { nr * e.exp_m1() };
        r = nr;
        d -= 1;
    }
    if d > MAX_DEPTH {
        return Err(ScalarError::CapacityExceeded("depth cap of 4 exceeded"));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(ScalarError::Domain("invalid innermost value"));
    }
    Ok(LogScalar {
        depth: d,
        r,
        exact: None,
        err: e,
    })
}

/// Exact integer; dropped to depth 1 beyond the exactness threshold.
pub fn ls_make(n: BigUint) -> LogScalar {
    if n.is_zero() {
        return LogScalar::zero();
    }
    if n.bits() > EXACT_BITS {
        let r = big_ln(&n);
        return LogScalar::with_ln(r, r * f64::EPSILON);
    }
    let r = big_ln(&n);
    LogScalar {
        depth: 0,
        r,
        exact: Some(n),
        err: 0.0,
    }
}

/// `e^x`.
pub fn ls_exp(x: &LogScalar) -> Result<LogScalar> {
    if x.is_zero() {
        return Ok(LogScalar::one());
    }
    let fits = match x.depth {
        0 => x.exact.as_ref().is_some_and(|n| n.bits() <= 1000),
        1 => x.r <= LN_F64_MAX,
        _ => false,
    };
    if fits {
        let v = x.to_f64().expect("value fits");
        let e = match x.depth {
            0 => v * f64::EPSILON,
            _ => v * x.err.exp_m1() + v * f64::EPSILON,
        };
        LogScalar::from_lnval(Ln::F(v, e))
    } else {
        LogScalar::from_lnval(Ln::S(x.clone()))
    }
}

/// `x + y`.
pub fn ls_add(x: &LogScalar, y: &LogScalar) -> LogScalar {
    if x.is_zero() {
        return y.clone();
    }
    if y.is_zero() {
        return x.clone();
    }
    if let (Some(a), Some(b)) = (&x.exact, &y.exact) {
        if x.depth == 0 && y.depth == 0 {
            return ls_make(a + b);
        }
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    match (hi.ln(), lo.ln()) {
        (Ln::F(a, ea), Ln::F(b, eb)) => {
            let c = a + (b - a).exp().ln_1p();
            let e = ea.max(eb) + 2.0 * c.abs() * f64::EPSILON;
            LogScalar::from_lnval(Ln::F(c, e)).expect("sum of values >= 1")
        }
        (Ln::S(a), _) => {
            let mut a = inexact(a);
            a.err += ABSORBED;
            LogScalar::from_lnval(Ln::S(a)).expect("absorbed sum stays in range")
        }
        (Ln::F(..), Ln::S(_)) => unreachable!("ordering puts the larger operand first"),
    }
}

/// `x · y`.
pub fn ls_mul(x: &LogScalar, y: &LogScalar) -> LogScalar {
    if x.is_zero() || y.is_zero() {
        return LogScalar::zero();
    }
    if x.depth == 0 && y.depth == 0 {
        return ls_make(x.exact.as_ref().unwrap() * y.exact.as_ref().unwrap());
    }
    let l = match (x.ln(), y.ln()) {
        (Ln::F(a, ea), Ln::F(b, eb)) => {
            let c = a + b;
            if c.is_finite() {
                Ln::F(c, ea + eb + c * f64::EPSILON)
            } else {
                let big = ls_add(&LogScalar::with_ln(a.ln(), 0.0), &LogScalar::with_ln(b.ln(), 0.0));
                Ln::S(big)
            }
        }
        (Ln::S(a), Ln::F(b, _)) | (Ln::F(b, _), Ln::S(a)) => Ln::S(add_float(&a, b)),
        (Ln::S(a), Ln::S(b)) => Ln::S(ls_add(&a, &b)),
    };
    LogScalar::from_lnval(l).expect("product of values >= 1")
}

fn inexact(a: LogScalar) -> LogScalar {
    match a.exact {
        Some(n) if a.depth == 0 => {
            let r = big_ln(&n);
            LogScalar::with_ln(r, r * f64::EPSILON)
        }
        _ => a,
    }
}

/// `a + b` for `a` beyond the float range and a float `b`.
fn add_float(a: &LogScalar, b: f64) -> LogScalar {
    let mut s = inexact(a.clone());
    if b != 0.0 {
        s.err += ABSORBED;
    }
    s
}

/// `x · f` for a positive real factor; the result must stay ≥ 1.
pub fn ls_mul_f64(x: &LogScalar, f: f64) -> Result<LogScalar> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(ScalarError::Domain("factor must be positive and finite"));
    }
    if x.is_zero() {
        return Ok(LogScalar::zero());
    }
    if f == 1.0 {
        return Ok(x.clone());
    }
    match x.ln() {
        Ln::F(a, e) => LogScalar::from_lnval(Ln::F(a + f.ln(), e + (a + f.ln()).abs() * f64::EPSILON)),
        Ln::S(a) => LogScalar::from_lnval(Ln::S(add_float(&a, f.ln()))),
    }
}

/// `x^p` for real `p > 0`.
pub fn ls_pow_f64(x: &LogScalar, p: f64) -> Result<LogScalar> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(ScalarError::Domain("power must be positive and finite"));
    }
    if x.is_zero() {
        return Ok(LogScalar::zero());
    }
    match x.ln() {
        Ln::F(a, e) => {
            let c = a * p;
            if c.is_finite() {
                LogScalar::from_lnval(Ln::F(c, e * p + c * f64::EPSILON))
            } else {
                let big = ls_mul_f64(&LogScalar::from_f64(a)?, p)?;
                LogScalar::from_lnval(Ln::S(big))
            }
        }
        Ln::S(a) => LogScalar::from_lnval(Ln::S(ls_mul_f64(&a, p)?)),
    }
}

/// `x − y` for `x ≥ y`; the difference must be zero or at least 1.
pub fn ls_sub(x: &LogScalar, y: &LogScalar) -> Result<LogScalar> {
    if y.is_zero() {
        return Ok(x.clone());
    }
    if x.depth == 0 && y.depth == 0 {
        let (a, b) = (x.to_biguint().unwrap(), y.to_biguint().unwrap());
        if a < b {
            return Err(ScalarError::Domain("negative difference"));
        }
        return Ok(ls_make(a - b));
    }
    match x.cmp(y) {
        Ordering::Less => return Err(ScalarError::Domain("negative difference")),
        Ordering::Equal if x.depth <= 1 && y.depth <= 1 && x.r == y.r => {
            return Ok(LogScalar::zero());
        }
        _ => {}
    }
    match (x.ln(), y.ln()) {
        (Ln::F(a, ea), Ln::F(b, eb)) => {
            let t = -(b - a).exp_m1();
            let c = a + t.ln();
            let e = ea + (ea + eb) * (1.0 - t) / t + 2.0 * c.abs() * f64::EPSILON;
            LogScalar::from_lnval(Ln::F(c, e))
        }
        (Ln::S(a), _) => {
            let mut a = inexact(a);
            a.err += ABSORBED;
            LogScalar::from_lnval(Ln::S(a))
        }
        (Ln::F(..), Ln::S(_)) => Err(ScalarError::Domain("negative difference")),
    }
}

/// Empty-slice convention for [`log_ratio`]: a zero numerator gives ratio 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroNumerator {
    Reject,
    RatioZero,
}

/// `ln(num) / ln(den)`.
pub fn log_ratio(num: &LogScalar, den: &LogScalar, zero: ZeroNumerator) -> Result<LogRatio> {
    if den <= &LogScalar::one() {
        return Err(ScalarError::Domain("denominator must exceed 1"));
    }
    if num.is_zero() {
        return match zero {
            ZeroNumerator::RatioZero => Ok(LogRatio {
                value: 0.0,
                error_bound: 0.0,
            }),
            ZeroNumerator::Reject => Err(ScalarError::Domain("zero numerator")),
        };
    }
    match (num.ln(), den.ln()) {
        (Ln::F(a, ea), Ln::F(b, eb)) => {
            let v = a / b;
            Ok(LogRatio {
                value: v,
                error_bound: (ea + v.abs() * eb) / b + 4.0 * v.abs() * f64::EPSILON,
            })
        }
        (Ln::F(..), Ln::S(_)) => Ok(LogRatio {
            value: 0.0,
            error_bound: ABSORBED,
        }),
        (Ln::S(_), Ln::F(..)) => Err(ScalarError::CapacityExceeded("ratio exceeds float range")),
        (Ln::S(a), Ln::S(b)) => deep_ratio(&a, &b),
    }
}

/// `a / b` for two values beyond the float range.
fn deep_ratio(a: &LogScalar, b: &LogScalar) -> Result<LogRatio> {
    match (a.ln(), b.ln()) {
        (Ln::F(x, ex), Ln::F(y, ey)) => {
            let d = x - y;
            if d > LN_F64_MAX {
                return Err(ScalarError::CapacityExceeded("ratio exceeds float range"));
            }
            let v = d.exp();
            Ok(LogRatio {
                value: v,
                error_bound: v * (ex + ey).exp_m1() + 4.0 * v * f64::EPSILON,
            })
        }
        (Ln::F(..), Ln::S(_)) => Ok(LogRatio {
            value: 0.0,
            error_bound: ABSORBED,
        }),
        (Ln::S(_), Ln::F(..)) => Err(ScalarError::CapacityExceeded("ratio exceeds float range")),
        (Ln::S(x), Ln::S(y)) => {
            if x.depth == y.depth && x.r == y.r {
                let e = if x.err == 0.0 && y.err == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                Ok(LogRatio {
                    value: 1.0,
                    error_bound: e,
                })
            } else if x > y {
                Err(ScalarError::CapacityExceeded("ratio exceeds float range"))
            } else {
                Ok(LogRatio {
                    value: 0.0,
                    error_bound: ABSORBED,
                })
            }
        }
    }
}

impl PartialEq for LogScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LogScalar {}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        if self.depth >= 2 || other.depth >= 2 {
            return self.depth.cmp(&other.depth).then(self.r.total_cmp(&other.r));
        }
        if let (0, 0) = (self.depth, other.depth) {
            return self.exact.cmp(&other.exact);
        }
        self.r.total_cmp(&other.r).then(self.depth.cmp(&other.depth))
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

impl From<u64> for LogScalar {
    fn from(n: u64) -> Self {
        LogScalar::from_u64(n)
    }
}

impl From<BigUint> for LogScalar {
    fn from(n: BigUint) -> Self {
        ls_make(n)
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    depth: u8,
    r: f64,
    exact: Option<String>,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    error_bound: f64,
}

fn is_zero_f64(x: &f64) -> bool {
    *x == 0.0
}

impl Serialize for LogScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let exact = match self.depth {
            0 => Some(
                self.exact
                    .as_ref()
                    .map_or_else(|| "0".to_string(), |n| n.to_str_radix(10)),
            ),
            _ => None,
        };
        Wire {
            depth: self.depth,
            r: self.r,
            exact,
            error_bound: self.err,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        match (w.depth, w.exact) {
            (0, Some(s)) => {
                let n = BigUint::parse_bytes(s.as_bytes(), 10)
                    .ok_or_else(|| D::Error::custom("exact must be a decimal integer"))?;
                Ok(ls_make(n))
            }
            (0, None) => Err(D::Error::custom("depth 0 requires an exact value")),
            (_, Some(_)) => Err(D::Error::custom("exact is only allowed at depth 0")),
            (d, None) => {
                let mut v = canonical(d, w.r, w.error_bound).map_err(D::Error::custom)?;
                if v.depth == 0 {
                    return Err(D::Error::custom("invalid depth"));
                }
                v.err = v.err.max(0.0);
                Ok(v)
            }
        }
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        LogScalar::zero()
    }
}

impl LogScalar {
    /// True when the value is exactly one.
    pub fn is_one(&self) -> bool {
        self.depth == 0 && self.exact.as_ref().is_some_and(|n| n.is_one())
    }

    /// Widens the error bound of an inexact value by `e` (in units of the
    /// innermost logarithm). Exact values are returned unchanged.
    pub fn with_extra_error(&self, e: f64) -> Self {
        let mut v = self.clone();
        if v.depth > 0 {
            v.err += e.abs();
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn ln_ratio(a: u64, b: u64) -> f64 {
        log_ratio(&a.into(), &b.into(), ZeroNumerator::Reject).unwrap().value
    }

    #[test]
    fn make_small_and_zero() {
        assert!(ls_make(BigUint::zero()).is_zero());
        let t = LogScalar::from_u64(12);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.to_u64(), Some(12));
        assert!((t.r() - 12f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn make_two_pow_200() {
        let n = BigUint::one() << 200u32;
        let x = ls_make(n.clone());
        assert_eq!(x.exact(), Some(&n));
        assert!((x.r() - 138.629_436_111_989_06).abs() < 1e-9);
    }

    #[test]
    fn exact_threshold_drops_to_depth_one() {
        let n = BigUint::one() << 5000u32;
        let x = ls_make(n);
        assert_eq!(x.depth(), 1);
        assert!((x.r() - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn exp_examples() {
        let one = ls_exp(&LogScalar::zero()).unwrap();
        assert!(one.is_one());
        let h2 = ls_exp(&LogScalar::from_u64(162)).unwrap();
        assert_eq!((h2.depth(), h2.r()), (1, 162.0));
        let h3 = ls_exp(&h2).unwrap();
        assert_eq!(h3.depth(), 1);
        let want = 162f64.exp();
        assert!((h3.r() - want).abs() / want < 1e-15);
        let h4 = ls_exp(&h3).unwrap();
        assert_eq!((h4.depth(), h4.r()), (2, h3.r()));
    }

    #[test]
    fn exp_of_huge_exact_goes_to_depth_two() {
        let n = BigUint::one() << 2000u32;
        let y = ls_exp(&ls_make(n)).unwrap();
        assert_eq!(y.depth(), 2);
        assert!((y.r() - 2000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn depth_cap() {
        let mut x = LogScalar::from_ln(800.0).unwrap();
        x = ls_exp(&x).unwrap();
        assert_eq!(x.depth(), 2);
        x = ls_exp(&x).unwrap();
        x = ls_exp(&x).unwrap();
        assert_eq!(x.depth(), 4);
        assert!(matches!(ls_exp(&x), Err(ScalarError::CapacityExceeded(_))));
    }

    #[test]
    fn add_examples() {
        assert_eq!(ls_add(&5.into(), &7.into()).to_u64(), Some(12));
        let a = ls_add(&LogScalar::from_ln(100.0).unwrap(), &50.into());
        assert_eq!(a.depth(), 1);
        assert!((a.r() - 100.0).abs() < 1e-12);
        let e10 = LogScalar::from_ln(10.0).unwrap();
        let s = ls_add(&e10, &e10);
        assert!((s.r() - (10.0 + std::f64::consts::LN_2)).abs() < 1e-13);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(ls_mul(&6.into(), &7.into()).to_u64(), Some(42));
        let p = ls_mul(&LogScalar::from_ln(50.0).unwrap(), &LogScalar::from_ln(70.0).unwrap());
        assert_eq!((p.depth(), p.r()), (1, 120.0));
        let big = LogScalar::from_ln(1e70).unwrap();
        let q = ls_mul(&big, &4.into());
        assert_eq!(q.depth(), 1);
        assert_eq!(q.r(), 1e70);
        assert!(q.error_bound() >= 4f64.ln() - 1e-12 || q.error_bound() >= 1e70 * f64::EPSILON);
        assert!(ls_mul(&LogScalar::zero(), &big).is_zero());
    }

    #[test]
    fn ratio_examples() {
        let r = log_ratio(
            &LogScalar::from_ln(30.0).unwrap(),
            &LogScalar::from_ln(20.0).unwrap(),
            ZeroNumerator::Reject,
        )
        .unwrap();
        assert!((r.value - 1.5).abs() < 1e-15);
        assert!((ln_ratio(40401, 200) - 2.001_882_688_848_55).abs() < 1e-12);
        assert_eq!(ln_ratio(1, 10), 0.0);
    }

    #[test]
    fn ratio_domain() {
        assert!(log_ratio(&5.into(), &1.into(), ZeroNumerator::RatioZero).is_err());
        assert!(log_ratio(&LogScalar::zero(), &5.into(), ZeroNumerator::Reject).is_err());
        let z = log_ratio(&LogScalar::zero(), &5.into(), ZeroNumerator::RatioZero).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn deep_ratio_of_absorbed_terms_is_one() {
        let h = ls_exp(&ls_exp(&LogScalar::from_u64(164)).unwrap()).unwrap();
        let count = ls_mul(&h, &8.into());
        let r = log_ratio(&count, &h, ZeroNumerator::Reject).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.error_bound < 1e-12);
    }

    #[test]
    fn sub_cases() {
        assert_eq!(ls_sub(&10.into(), &4.into()).unwrap().to_u64(), Some(6));
        assert!(ls_sub(&4.into(), &10.into()).is_err());
        let a = LogScalar::from_ln(10.0).unwrap();
        let d = ls_sub(&a, &LogScalar::from_ln(9.0).unwrap()).unwrap();
        let want = (10f64.exp() - 9f64.exp()).ln();
        assert!((d.r() - want).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        for x in [
            LogScalar::zero(),
            LogScalar::from_u64(12),
            ls_make(BigUint::one() << 300u32),
            LogScalar::from_ln(164.0).unwrap(),
            ls_exp(&LogScalar::from_ln(800.0).unwrap()).unwrap(),
        ] {
            let s = serde_json::to_string(&x).unwrap();
            let y: LogScalar = serde_json::from_str(&s).unwrap();
            assert_eq!(x, y);
            assert_eq!(x.depth(), y.depth());
        }
        let s = serde_json::to_string(&LogScalar::from_u64(12)).unwrap();
        assert!(s.contains("\"exact\":\"12\""));
        assert!(serde_json::from_str::<LogScalar>(r#"{"depth":0,"r":1.0,"exact":null}"#).is_err());
    }

    #[test]
    fn repr_forms() {
        assert_eq!(LogScalar::from_u64(40401).repr(), "40401");
        assert_eq!(LogScalar::from_ln(164.0).unwrap().repr(), "e^164");
    }

    fn arb_big() -> impl Strategy<Value = BigUint> {
        prop::collection::vec(any::<u32>(), 1..40).prop_map(BigUint::new)
    }

    fn arb_scalar() -> impl Strategy<Value = LogScalar> {
        prop_oneof![
            arb_big().prop_map(ls_make),
            (0.0f64..1e6).prop_map(|r| LogScalar::from_ln(r).unwrap()),
            (710.0f64..1e300).prop_map(|r| canonical(2, r, 0.0).unwrap()),
            (710.0f64..1e300).prop_map(|r| canonical(3, r, 0.0).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn square_ratio_is_two(n in 2u64..1_000_000) {
            let x = LogScalar::from_u64(n);
            let r = log_ratio(&ls_mul(&x, &x), &x, ZeroNumerator::Reject).unwrap();
            prop_assert!((r.value - 2.0).abs() <= 1e-12);
        }

        #[test]
        fn order_matches_big_integers(a in arb_big(), b in arb_big()) {
            prop_assert_eq!(ls_make(a.clone()).cmp(&ls_make(b.clone())), a.cmp(&b));
        }

        #[test]
        fn order_is_transitive(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        }

        #[test]
        fn add_within_declared_error(a in 0.0f64..600.0, b in 0.0f64..600.0) {
            let x = LogScalar::from_ln(a).unwrap();
            let y = LogScalar::from_ln(b).unwrap();
            let s = ls_add(&x, &y);
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            let truth = hi + (lo - hi).exp().ln_1p();
            prop_assert!((s.r() - truth).abs() <= s.error_bound() + 1e-15 * truth.abs());
        }

        #[test]
        fn add_exact_and_float_within_error(n in 1u64..u64::MAX, a in 0.0f64..100.0) {
            let x = LogScalar::from_u64(n);
            let y = LogScalar::from_ln(a).unwrap();
            let s = ls_add(&x, &y);
            let (p, q) = ((n as f64).ln(), a);
            let (hi, lo) = if p > q { (p, q) } else { (q, p) };
            let truth = hi + (lo - hi).exp().ln_1p();
            prop_assert!((s.r() - truth).abs() <= s.error_bound() + 1e-13);
        }

        #[test]
        fn canonical_form_holds(x in arb_scalar(), y in arb_scalar()) {
            for v in [ls_add(&x, &y), ls_mul(&x, &y)] {
                if v.depth() >= 2 {
                    prop_assert!(v.r() > LN_F64_MAX || !v.r().exp().is_finite());
                }
                let again = canonical(v.depth().max(1), v.r(), v.error_bound()).unwrap();
                if v.depth() >= 1 {
                    prop_assert_eq!(again.depth(), v.depth());
                }
            }
        }

        #[test]
        fn add_commutes(x in arb_scalar(), y in arb_scalar()) {
            let (a, b) = (ls_add(&x, &y), ls_add(&y, &x));
            prop_assert_eq!(a.depth(), b.depth());
            prop_assert_eq!(a.r(), b.r());
        }
    }
}
