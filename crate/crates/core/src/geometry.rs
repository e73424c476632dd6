//! Tubes, lines, cones and boxes with the membership predicates used by every
//! construction.
//!
//! A tube `t_{u,v}` is the width-1 band
//! `−x/u + v·s < y ≤ −x/u + (v+1)·s` with `s = √(1 + 1/u²)`: `u` is the slope
//! of the perpendicular projecting line and `v` the displacement of the right
//! edge along it.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalars::{ls_add, ls_make, ls_mul, ls_sub, LogScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Point = (f64, f64);

/// `(u, v)` parametrization of a width-1 tube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    pub u: f64,
    pub v: f64,
}

impl TubeParams {
    pub fn new(u: f64, v: f64) -> Result<Self, GeometryError> {
        if u == 0.0 || !u.is_finite() || !v.is_finite() {
            return Err(GeometryError::InvalidParameter(format!(
                "tube needs finite u != 0 and finite v, got ({u}, {v})"
            )));
        }
        Ok(TubeParams { u, v })
    }

    /// Tube whose right edge is the ray from the origin at angle `phi` from
    /// the +y axis (positive towards +x).
    pub fn through_origin(phi: f64) -> Result<Self, GeometryError> {
        TubeParams::new(-phi.tan(), 0.0)
    }

    /// `√(1 + 1/u²)`, the vertical extent of the tube.
    pub fn stretch(&self) -> f64 {
        (1.0 + 1.0 / (self.u * self.u)).sqrt()
    }

    /// Direction angle of the tube lines, from the +y axis towards +x.
    pub fn direction_angle(&self) -> f64 {
        (-self.u).atan()
    }

    /// Signed offset `(x/u + y)/s` across the tube family; the tube is
    /// `v < offset ≤ v + 1`.
    pub fn offset(&self, p: Point) -> f64 {
        (p.0 / self.u + p.1) / self.stretch()
    }
}

/// Tube membership: lower bound strict, upper bound inclusive.
pub fn tube_contains(t: &TubeParams, p: Point) -> Result<bool, GeometryError> {
    if t.u == 0.0 {
        return Err(GeometryError::InvalidParameter("u = 0".into()));
    }
    let s = t.stretch();
    let base = -p.0 / t.u;
    Ok(base + t.v * s < p.1 && p.1 <= base + (t.v + 1.0) * s)
}

/// A width-1 tube: either the sloped band above or the vertical band `[x0, x0 + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Tube {
    Sloped { u: f64, v: f64 },
    Vertical { x0: f64 },
}

impl Tube {
    pub fn sloped(t: TubeParams) -> Self {
        Tube::Sloped { u: t.u, v: t.v }
    }

    pub fn vertical(x0: f64) -> Self {
        Tube::Vertical { x0 }
    }

    /// Tube through the origin at direction angle `phi`; the vertical case is
    /// the limit from positive angles, `[−1, 0)`.
    pub fn at_angle(phi: f64) -> Self {
        Self::right_edge_through(phi, 0.0)
    }

    /// Tube whose right edge passes through `(x_int, 0)` at angle `phi`.
    pub fn right_edge_through(phi: f64, x_int: f64) -> Self {
        if phi == 0.0 {
            return Tube::Vertical { x0: x_int - 1.0 };
        }
        let slope = 1.0 / phi.tan();
        let l = LineParams::with_x_intercept(slope, x_int);
        Tube::sloped(line_to_tube(&l).expect("nonzero slope"))
    }

    pub fn params(&self) -> Option<TubeParams> {
        match *self {
            Tube::Sloped { u, v } => Some(TubeParams { u, v }),
            Tube::Vertical { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            Tube::Sloped { u, v } => TubeParams::new(u, v).map(|_| ()),
            Tube::Vertical { x0 } if x0.is_finite() => Ok(()),
            Tube::Vertical { .. } => Err(GeometryError::InvalidParameter("non-finite x0".into())),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Tube::Sloped { u, v } => tube_contains(&TubeParams { u, v }, p).expect("validated tube"),
            Tube::Vertical { x0 } => x0 <= p.0 && p.0 < x0 + 1.0,
        }
    }

    /// Direction angle from the +y axis.
    pub fn direction_angle(&self) -> f64 {
        match *self {
            Tube::Sloped { u, .. } => (-u).atan(),
            Tube::Vertical { .. } => 0.0,
        }
    }

    /// Closed x-interval covering the tube's cross-section at height `y`.
    pub fn x_range_at(&self, y: f64) -> (f64, f64) {
        match *self {
            Tube::Vertical { x0 } => (x0, x0 + 1.0),
            Tube::Sloped { u, v } => {
                let s = (1.0 + 1.0 / (u * u)).sqrt();
                let a = (y - (v + 1.0) * s) * -u;
                let b = (y - v * s) * -u;
                (a.min(b), a.max(b))
            }
        }
    }

    /// Range of the tube's transverse coordinate over a rectangle, and the
    /// tube's own transverse interval; they intersect iff the tube can meet
    /// the rectangle.
    pub fn may_meet_rect(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        const SLACK: f64 = 1e-6;
        match *self {
            Tube::Vertical { x0: a } => x1 >= a - SLACK && x0 < a + 1.0 + SLACK,
            Tube::Sloped { u, v } => {
                let s = (1.0 + 1.0 / (u * u)).sqrt();
                let g = |x: f64, y: f64| x / u + y;
                let c = [g(x0, y0), g(x0, y1), g(x1, y0), g(x1, y1)];
                let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let pad = SLACK * (1.0 + lo.abs().max(hi.abs()));
                hi + pad > v * s && lo - pad <= (v + 1.0) * s
            }
        }
    }
}

/// Which axis a line's intercept is measured on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterceptAxis {
    X,
    Y,
}

/// Slope/intercept parametrization `(ũ, ṽ)` of a line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub slope: f64,
    pub intercept: f64,
    pub axis: InterceptAxis,
}

impl LineParams {
    pub fn with_x_intercept(slope: f64, intercept: f64) -> Self {
        LineParams {
            slope,
            intercept,
            axis: InterceptAxis::X,
        }
    }

    pub fn with_y_intercept(slope: f64, intercept: f64) -> Self {
        LineParams {
            slope,
            intercept,
            axis: InterceptAxis::Y,
        }
    }

    /// The same line with the other intercept tag.
    pub fn converted(&self) -> Result<Self, GeometryError> {
        if self.slope == 0.0 {
            return Err(GeometryError::InvalidParameter(
                "horizontal line has no x-intercept".into(),
            ));
        }
        Ok(match self.axis {
            InterceptAxis::X => LineParams::with_y_intercept(self.slope, -self.slope * self.intercept),
            InterceptAxis::Y => LineParams::with_x_intercept(self.slope, -self.intercept / self.slope),
        })
    }
}

/// Tube whose right edge is the line `y = ũ(x − ṽ)`.
pub fn line_to_tube(l: &LineParams) -> Result<TubeParams, GeometryError> {
    let l = match l.axis {
        InterceptAxis::X => *l,
        InterceptAxis::Y => l.converted()?,
    };
    if l.slope == 0.0 || !l.slope.is_finite() {
        return Err(GeometryError::InvalidParameter(
            "line slope must be finite and nonzero".into(),
        ));
    }
    let ut = l.slope;
    let v = -ut * l.intercept / (1.0 + ut * ut).sqrt();
    TubeParams::new(-1.0 / ut, v)
}

/// Broken line `{y = ⌊ũx + ṽ⌋}` membership (y-intercept form).
pub fn broken_line_contains(l: &LineParams, p: (i64, i64)) -> bool {
    let l = match l.axis {
        InterceptAxis::Y => *l,
        InterceptAxis::X => match l.converted() {
            Ok(c) => c,
            Err(_) => return false,
        },
    };
    p.1 as f64 == (l.slope * p.0 as f64 + l.intercept).floor()
}

/// Cone with axis along +y and total angle `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub theta: f64,
    pub vertex: (f64, f64),
}

impl ConeParams {
    pub fn new(theta: f64, vertex: (f64, f64)) -> Result<Self, GeometryError> {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(GeometryError::InvalidParameter(format!(
                "cone angle {theta} not in (0, pi)"
            )));
        }
        Ok(ConeParams { theta, vertex })
    }

    /// `cot(θ/2)`, the slope of the cone edges.
    pub fn beta(&self) -> f64 {
        1.0 / (self.theta / 2.0).tan()
    }
}

/// Closed-cone membership.
pub fn cone_contains(c: &ConeParams, p: Point) -> bool {
    let dx = p.0 - c.vertex.0;
    let dy = p.1 - c.vertex.1;
    dy >= 0.0 && dx.abs() <= dy * (c.theta / 2.0).tan()
}

/// Signed real backed by a LogScalar magnitude.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coord {
    pub negative: bool,
    pub magnitude: LogScalar,
}

impl Coord {
    pub fn from_i64(v: i64) -> Self {
        Coord::from_bigint(&BigInt::from(v))
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        Coord {
            negative: v.is_negative(),
            magnitude: ls_make(v.magnitude().clone()),
        }
    }

    pub fn positive(m: LogScalar) -> Self {
        Coord {
            negative: false,
            magnitude: m,
        }
    }

    pub fn negative(m: LogScalar) -> Self {
        Coord {
            negative: !m.is_zero(),
            magnitude: m,
        }
    }

    pub fn to_bigint(&self) -> Option<BigInt> {
        let m = self.magnitude.to_biguint()?;
        let sign = if self.negative { Sign::Minus } else { Sign::Plus };
        Some(BigInt::from_biguint(sign, m))
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.to_bigint().and_then(|b| i64::try_from(b).ok())
    }

    /// Same sign and indistinct magnitudes.
    pub fn indistinct(&self, o: &Coord) -> bool {
        self.negative == o.negative && self.magnitude.indistinct(&o.magnitude)
    }

    /// `self + d` for a nonnegative `d`.
    pub fn plus(&self, d: &LogScalar) -> Coord {
        if let (Some(a), Some(b)) = (self.to_bigint(), d.to_biguint()) {
            return Coord::from_bigint(&(a + BigInt::from(b)));
        }
        if !self.negative {
            return Coord::positive(ls_add(&self.magnitude, d));
        }
        if d >= &self.magnitude {
            Coord::positive(ls_sub(d, &self.magnitude).unwrap_or_else(|_| LogScalar::zero()))
        } else {
            Coord::negative(ls_sub(&self.magnitude, d).unwrap_or_else(|_| LogScalar::zero()))
        }
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        let zs = self.magnitude.is_zero();
        let zo = other.magnitude.is_zero();
        let sa = if zs {
            0
        } else if self.negative {
            -1
        } else {
            1
        };
        let sb = if zo {
            0
        } else if other.negative {
            -1
        } else {
            1
        };
        match sa.cmp(&sb) {
            Ordering::Equal if sa < 0 => other.magnitude.cmp(&self.magnitude),
            Ordering::Equal => self.magnitude.cmp(&other.magnitude),
            o => o,
        }
    }
}

/// Half-open square `[x0, x0+side) × [y0, y0+side)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box {
    pub x0: Coord,
    pub y0: Coord,
    pub side: LogScalar,
}

/// A box with exact integer corner and side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactBox {
    pub x0: BigInt,
    pub y0: BigInt,
    pub side: BigInt,
}

impl ExactBox {
    pub fn x1(&self) -> BigInt {
        &self.x0 + &self.side
    }

    pub fn y1(&self) -> BigInt {
        &self.y0 + &self.side
    }
}

impl Box {
    pub fn new(x0: Coord, y0: Coord, side: LogScalar) -> Result<Self, GeometryError> {
        if side.is_zero() {
            return Err(GeometryError::InvalidParameter("box side must be positive".into()));
        }
        Ok(Box { x0, y0, side })
    }

    pub fn lattice(x0: i64, y0: i64, side: u64) -> Self {
        Box {
            x0: Coord::from_i64(x0),
            y0: Coord::from_i64(y0),
            side: LogScalar::from_u64(side),
        }
    }

    pub fn big(x0: &BigInt, y0: &BigInt, side: &BigUint) -> Self {
        Box {
            x0: Coord::from_bigint(x0),
            y0: Coord::from_bigint(y0),
            side: ls_make(side.clone()),
        }
    }

    /// The closed square `[−l, l]²` as a half-open box.
    pub fn centered(l: &LogScalar) -> Self {
        match l.to_biguint() {
            Some(v) => {
                let neg = -BigInt::from(v.clone());
                Box::big(&neg, &neg, &(2u32 * v + 1u32))
            }
            None => Box {
                x0: Coord::negative(l.clone()),
                y0: Coord::negative(l.clone()),
                side: ls_mul(l, &LogScalar::from_u64(2)),
            },
        }
    }

    pub fn x1(&self) -> Coord {
        self.x0.plus(&self.side)
    }

    pub fn y1(&self) -> Coord {
        self.y0.plus(&self.side)
    }

    pub fn as_exact(&self) -> Option<ExactBox> {
        Some(ExactBox {
            x0: self.x0.to_bigint()?,
            y0: self.y0.to_bigint()?,
            side: BigInt::from(self.side.to_biguint()?),
        })
    }

    pub fn contains_point(&self, p: Point) -> bool {
        match self.as_exact() {
            Some(b) => {
                let f = |v: &BigInt| -> f64 { num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN) };
                f(&b.x0) <= p.0 && p.0 < f(&b.x1()) && f(&b.y0) <= p.1 && p.1 < f(&b.y1())
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(u: f64) -> (f64, f64) {
        let n = (1.0 / u, 1.0);
        let l = (n.0 * n.0 + n.1 * n.1).sqrt();
        (n.0 / l, n.1 / l)
    }

    #[test]
    fn tube_probes() {
        let t = TubeParams::new(1.0, 0.0).unwrap();
        assert!(tube_contains(&t, (0.0, 1.0)).unwrap());
        assert!(!tube_contains(&t, (0.0, 0.0)).unwrap());
        assert!(tube_contains(&t, (0.0, 2f64.sqrt())).unwrap());
        assert!(tube_contains(&TubeParams { u: 0.0, v: 0.0 }, (0.0, 0.0)).is_err());
    }

    #[test]
    fn line_conversion_examples() {
        let t = line_to_tube(&LineParams::with_x_intercept(1.0, 0.0)).unwrap();
        assert_eq!((t.u, t.v), (-1.0, 0.0));
        let t = line_to_tube(&LineParams::with_x_intercept(-2.0, 0.0)).unwrap();
        assert_eq!(t.u, 0.5);
        assert_eq!(t.v, 0.0);
        let t = line_to_tube(&LineParams::with_x_intercept(1.0, 1.0)).unwrap();
        assert_eq!(t.u, -1.0);
        assert!((t.v + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        for x in [1.0, 2.5, -3.0] {
            let y = x - 1.0;
            let lower = -x / t.u + t.v * t.stretch();
            assert!((y - lower).abs() < 1e-12);
        }
        assert!(line_to_tube(&LineParams::with_x_intercept(0.0, 1.0)).is_err());
    }

    #[test]
    fn broken_line_examples() {
        let l = LineParams::with_y_intercept(1.0, 0.5);
        assert!(broken_line_contains(&l, (2, 2)));
        assert!(!broken_line_contains(&l, (0, 1)));
        assert!(broken_line_contains(&LineParams::with_y_intercept(0.0, 3.0), (100, 3)));
    }

    #[test]
    fn cone_examples() {
        let c = ConeParams::new(0.5, (0.0, 0.0)).unwrap();
        assert!(cone_contains(&c, (0.0, 10.0)));
        assert!(!cone_contains(&c, (10.0, 0.0)));
        assert!(cone_contains(&c, ((0.25f64).tan() * 100.0, 100.0)));
        assert!((c.beta() - 3.916_317_364_645_9).abs() < 1e-9);
        assert!(ConeParams::new(-1.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn angle_tubes_sit_beside_the_ray() {
        let left = Tube::at_angle(0.1);
        let right = Tube::at_angle(-0.1);
        let y = 100.0;
        let x = y * 0.1f64.tan();
        assert!(left.contains((x - 0.5, y)));
        assert!(!left.contains((x + 0.5, y)));
        let x = y * (-0.1f64).tan();
        assert!(right.contains((x + 0.5, y)));
        assert!(!right.contains((x - 0.5, y)));
        assert!(Tube::at_angle(0.0).contains((-0.5, 7.0)));
    }

    #[test]
    fn coord_order_and_sum() {
        let a = Coord::from_i64(-5);
        let b = Coord::from_i64(3);
        assert!(a < b);
        assert_eq!(a.plus(&LogScalar::from_u64(12)).to_i64(), Some(7));
        let big = Coord::negative(LogScalar::from_ln(200.0).unwrap());
        assert!(big < a);
        let back = big.plus(&LogScalar::from_ln(201.0).unwrap());
        assert!(!back.negative);
    }

    proptest! {
        #[test]
        fn width_one_certificate(lu in -2.0f64..2.0, sign in prop::bool::ANY, v in -50.0f64..50.0, s in -100.0f64..100.0) {
            let u = if sign { 10f64.powf(lu) } else { -(10f64.powf(lu)) };
            let t = TubeParams::new(u, v).unwrap();
            let n = unit(u);
            let dir = (-n.1, n.0);
            let edge = (n.0 * v + dir.0 * s, n.1 * v + dir.1 * s);
            let at = |d: f64| (edge.0 + n.0 * d, edge.1 + n.1 * d);
            prop_assert!(tube_contains(&t, at(0.5)).unwrap());
            prop_assert!(!tube_contains(&t, at(-0.001)).unwrap());
            prop_assert!(!tube_contains(&t, at(1.001)).unwrap());
        }

        #[test]
        fn conversion_consistency(ut in -50.0f64..50.0, vt in -20.0f64..20.0, x in -100.0f64..100.0) {
            prop_assume!(ut.abs() > 1e-3);
            let t = line_to_tube(&LineParams::with_x_intercept(ut, vt)).unwrap();
            let y = ut * (x - vt);
            let lower = -x / t.u + t.v * t.stretch();
            prop_assert!((y - lower).abs() <= 1e-9 * (1.0 + y.abs()));
        }

        #[test]
        fn intercept_round_trip(ut in -50.0f64..50.0, vt in -20.0f64..20.0) {
            prop_assume!(ut.abs() > 1e-3);
            let l = LineParams::with_x_intercept(ut, vt);
            let back = l.converted().unwrap().converted().unwrap();
            prop_assert!((back.intercept - vt).abs() <= 1e-12 * (1.0 + vt.abs()));
        }

        #[test]
        fn broken_line_in_unit_vertical_band(ut in 0.001f64..20.0, vt in -50.0f64..50.0, x in -100i64..=100) {
            let l = LineParams::with_y_intercept(ut, vt);
            let y = (ut * x as f64 + vt).floor() as i64;
            prop_assert!(broken_line_contains(&l, (x, y)));
            let line_y = ut * x as f64 + vt;
            prop_assert!(line_y - 1.0 < y as f64 && y as f64 <= line_y);
        }

        #[test]
        fn may_meet_is_conservative(u in -5.0f64..5.0, v in -3.0f64..3.0, px in -20.0f64..20.0, py in -20.0f64..20.0) {
            prop_assume!(u.abs() > 0.01);
            let t = Tube::sloped(TubeParams::new(u, v).unwrap());
            if t.contains((px, py)) {
                prop_assert!(t.may_meet_rect(px - 0.1, px + 0.1, py - 0.1, py + 0.1));
                let (a, b) = t.x_range_at(py);
                prop_assert!(a - 1e-9 <= px && px <= b + 1e-9);
            }
        }
    }
}
