//! Generators for the strip, cone, fattened-cone and filled-band sets as
//! leveled chunk descriptions, with exact counting where coordinates are
//! machine integers and analytic counting beyond.

pub mod angles;
pub mod cone;
pub mod intro;
mod pointset;
pub mod strip;

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use angles::{harmonic_k, km_estimate, KmEstimate};
pub use cone::ConeLevel;
pub use intro::BandLevel;
pub use pointset::{PointSet, PointSetError};
pub use strip::StripLevel;

use crate::geometry::{Box, Coord, Tube};
use crate::scalars::{ls_add, ls_exp, ls_make, ls_mul, ls_mul_f64, ls_pow_f64, ls_sub, LogScalar};

/// Exact cone-type levels need their top row below this.
pub const CONE_EXACT_TOP: u64 = 1 << 50;
/// Exact strip levels need their top row below this.
pub const STRIP_EXACT_TOP: u64 = 1 << 62;
/// Largest point count `materialize` will produce.
pub const MATERIALIZE_CAP: u128 = 50_000_000;
/// Largest chunk count for which chunk lists are emitted.
const CHUNK_LIST_CAP: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
}

type Result<T> = std::result::Result<T, ConstructionError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConstructionError::InvalidParameter(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    IntroCone,
    Strip,
    Cone,
    FattenedCone,
}

/// How `h_{m+1}` is obtained from `H_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthPolicy {
    PaperExponential,
    Geometric { ratio: f64 },
    Power { exponent: f64 },
}

impl GrowthPolicy {
    fn validate(&self) -> Result<()> {
        match *self {
            GrowthPolicy::PaperExponential => Ok(()),
            GrowthPolicy::Geometric { ratio } if ratio > 1.0 && ratio.is_finite() => Ok(()),
            GrowthPolicy::Power { exponent } if exponent > 1.0 && exponent.is_finite() => Ok(()),
            g => invalid(format!("growth parameter must be finite and > 1: {g:?}")),
        }
    }
}

/// Generator parameters for every set family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetParams {
    IntroCone {
        theta: f64,
        k_lo: u32,
        k_hi: u32,
    },
    Strip {
        #[serde(default)]
        u0: Option<f64>,
        k: u64,
        w: u64,
        n1: u64,
        h1: u64,
        levels: u32,
        growth: GrowthPolicy,
    },
    Cone {
        theta: f64,
        w: u64,
        n1: u64,
        h1: u64,
        levels: u32,
        growth: GrowthPolicy,
    },
    FattenedCone {
        theta: f64,
        eps: f64,
        w: u64,
        n1: u64,
        h1: u64,
        levels: u32,
        growth: GrowthPolicy,
    },
}

impl SetParams {
    pub fn kind(&self) -> SetKind {
        match self {
            SetParams::IntroCone { .. } => SetKind::IntroCone,
            SetParams::Strip { .. } => SetKind::Strip,
            SetParams::Cone { .. } => SetKind::Cone,
            SetParams::FattenedCone { .. } => SetKind::FattenedCone,
        }
    }

    /// Full cone angle, for cone-type sets.
    pub fn theta(&self) -> Option<f64> {
        match *self {
            SetParams::IntroCone { theta, .. }
            | SetParams::Cone { theta, .. }
            | SetParams::FattenedCone { theta, .. } => Some(theta),
            SetParams::Strip { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(theta) = self.theta() {
            if !(theta > 0.0 && theta < std::f64::consts::PI) {
                return invalid(format!("theta must lie in (0, pi), got {theta}"));
            }
        }
        match *self {
            SetParams::IntroCone { k_lo, k_hi, .. } => {
                if k_lo < 1 || k_hi < k_lo || k_hi > 60 {
                    return invalid(format!("need 1 <= k_lo <= k_hi <= 60, got {k_lo}..{k_hi}"));
                }
                Ok(())
            }
            SetParams::Strip {
                u0,
                k,
                w,
                n1,
                h1,
                levels,
                growth,
            } => {
                if let Some(u) = u0 {
                    if u == 0.0 || !u.is_finite() {
                        return invalid("u0 must be finite and nonzero");
                    }
                }
                positive(&[("k", k), ("w", w), ("n1", n1), ("h1", h1), ("levels", levels as u64)])?;
                growth.validate()
            }
            SetParams::Cone {
                w,
                n1,
                h1,
                levels,
                growth,
                ..
            } => {
                positive(&[("w", w), ("n1", n1), ("h1", h1), ("levels", levels as u64)])?;
                growth.validate()
            }
            SetParams::FattenedCone {
                eps,
                w,
                n1,
                h1,
                levels,
                growth,
                ..
            } => {
                positive(&[("w", w), ("n1", n1), ("h1", h1), ("levels", levels as u64)])?;
                if !(eps > 0.0 && eps < w as f64) {
                    return invalid(format!("eps must lie in (0, w), got {eps}"));
                }
                growth.validate()
            }
        }
    }
}

fn positive(vals: &[(&str, u64)]) -> Result<()> {
    for (name, v) in vals {
        if *v == 0 {
            return invalid(format!("{name} must be >= 1"));
        }
    }
    Ok(())
}

/// A count known exactly or bracketed by `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Count {
    pub lo: LogScalar,
    pub hi: LogScalar,
}

impl Count {
    pub fn zero() -> Self {
        Count::exact(LogScalar::zero())
    }

    pub fn exact(v: LogScalar) -> Self {
        Count { lo: v.clone(), hi: v }
    }

    pub fn from_u128(v: u128) -> Self {
        Count::exact(ls_make(BigUint::from(v)))
    }

    pub fn between(lo: LogScalar, hi: LogScalar) -> Self {
        Count { lo, hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo.is_exact() && self.lo == self.hi
    }

    /// The exact value, if known.
    pub fn value(&self) -> Option<BigUint> {
        self.is_exact().then(|| self.lo.to_biguint()).flatten()
    }

    pub fn add(&self, o: &Count) -> Count {
        Count {
            lo: ls_add(&self.lo, &o.lo),
            hi: ls_add(&self.hi, &o.hi),
        }
    }
}

/// Interval `[x·e^{−err}, x·e^{err}]` around an inexact depth-1 value.
fn widen(x: &LogScalar) -> Count {
    if x.depth() != 1 || x.error_bound() == 0.0 {
        return Count::exact(x.clone());
    }
    let e = x.error_bound();
    let lo = LogScalar::from_ln((x.r() - e).max(0.0)).unwrap_or_else(|_| LogScalar::one());
    let hi = LogScalar::from_ln(x.r() + e).unwrap_or_else(|_| x.clone());
    Count::between(lo.with_extra_error(e), hi.with_extra_error(e))
}

/// Level geometry: exact lattice form or analytic summary.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LevelGeom {
    Cone(ConeLevel),
    Strip(StripLevel),
    Band(BandLevel),
    Analytic(AnalyticLevel),
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticLevel {
    pub shape: AnalyticShape,
    pub total: Count,
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum AnalyticShape {
    Cone { tan_half: f64, eps: f64, fattened: bool },
    Strip { width: u64 },
    Band { tan_half: f64 },
}

/// One round of a construction.
#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub m: u32,
    pub h: LogScalar,
    #[serde(rename = "H")]
    pub big_h: LogScalar,
    /// Exclusive top row.
    pub top: LogScalar,
    pub n: LogScalar,
    #[serde(rename = "K")]
    pub k: LogScalar,
    pub geom: LevelGeom,
}

/// Per-level slice result.
#[derive(Clone, Debug, PartialEq)]
pub enum LevelSlice {
    Exact(Vec<(i64, i64)>),
    Interval {
        lo: LogScalar,
        hi: LogScalar,
        side: LogScalar,
    },
}

impl LevelSlice {
    pub fn bounds(&self) -> (LogScalar, LogScalar) {
        match self {
            LevelSlice::Exact(p) => {
                let c = LogScalar::from_u64(p.len() as u64);
                (c.clone(), c)
            }
            LevelSlice::Interval { lo, hi, .. } => (lo.clone(), hi.clone()),
        }
    }
}

fn clamp_i64(v: &BigInt) -> i64 {
    const LIM: i64 = 1 << 61;
    if v > &BigInt::from(LIM) {
        LIM
    } else if v < &BigInt::from(-LIM) {
        -LIM
    } else {
        v.to_i64().expect("clamped")
    }
}

impl Level {
    pub fn is_exact(&self) -> bool {
        !matches!(self.geom, LevelGeom::Analytic(_))
    }

    /// Chunk height as a machine integer, when it fits.
    pub fn n_u64(&self) -> Option<u64> {
        self.n.to_u64()
    }

    /// Total number of points of the level.
    pub fn total(&self) -> Count {
        match &self.geom {
            LevelGeom::Cone(c) => Count::from_u128(c.total()),
            LevelGeom::Strip(s) => Count::from_u128(s.total()),
            LevelGeom::Band(b) => Count::exact(ls_make(b.total().magnitude().clone())),
            LevelGeom::Analytic(a) => a.total.clone(),
        }
    }

    /// Half-open bounding box `(x0, x1, y0, y1)` of the level.
    pub fn bbox(&self) -> (Coord, Coord, Coord, Coord) {
        let y0 = Coord::positive(self.h.clone());
        let y1 = Coord::positive(self.top.clone());
        match &self.geom {
            LevelGeom::Cone(c) => (Coord::from_i64(c.x_min()), Coord::from_i64(c.x_max() + 1), y0, y1),
            LevelGeom::Strip(s) => (Coord::from_i64(0), Coord::from_i64(s.k * s.w), y0, y1),
            LevelGeom::Band(b) => {
                let f = b.half_width(&(b.top() - 1));
                (Coord::from_bigint(&-&f), Coord::from_bigint(&(f + 1)), y0, y1)
            }
            LevelGeom::Analytic(a) => match a.shape {
                AnalyticShape::Cone { tan_half, eps, .. } => self.analytic_half_box(tan_half, eps, y0, y1),
                AnalyticShape::Band { tan_half } => self.analytic_half_box(tan_half, 0.0, y0, y1),
                AnalyticShape::Strip { width } => {
                    (Coord::from_i64(0), Coord::positive(LogScalar::from_u64(width)), y0, y1)
                }
            },
        }
    }

    fn analytic_half_box(&self, tan_half: f64, eps: f64, y0: Coord, y1: Coord) -> (Coord, Coord, Coord, Coord) {
        let half = ls_add(
            &ls_mul_f64(&self.top, tan_half).unwrap_or_else(|_| LogScalar::one()),
            &LogScalar::from_u64(eps.ceil() as u64 + 2),
        );
        (Coord::negative(half.clone()), Coord::positive(half), y0, y1)
    }

    /// Points of the level inside a box.
    pub fn count_in(&self, b: &Box) -> Count {
        let (lx0, lx1, ly0, ly1) = self.bbox();
        let (bx0, bx1, by0, by1) = (b.x0.clone(), b.x1(), b.y0.clone(), b.y1());
        let le = |a: &Coord, b: &Coord| a <= b && !a.indistinct(b);
        if le(&bx1, &lx0) || le(&lx1, &bx0) || le(&by1, &ly0) || le(&ly1, &by0) {
            return Count::zero();
        }
        if let Some(e) = b.as_exact() {
            let (x0, x1, y0, y1) = (e.x0.clone(), e.x1(), e.y0.clone(), e.y1());
            match &self.geom {
                LevelGeom::Cone(c) => {
                    return Count::from_u128(c.count_box(
                        clamp_i64(&x0),
                        clamp_i64(&x1),
                        clamp_i64(&y0),
                        clamp_i64(&y1),
                    ))
                }
                LevelGeom::Strip(s) => {
                    return Count::from_u128(s.count_box(
                        clamp_i64(&x0),
                        clamp_i64(&x1),
                        clamp_i64(&y0),
                        clamp_i64(&y1),
                    ))
                }
                LevelGeom::Band(bl) => {
                    return Count::exact(ls_make(bl.count_box(&x0, &x1, &y0, &y1).magnitude().clone()))
                }
                LevelGeom::Analytic(_) => {}
            }
        }
        let total = self.total();
        if le(&bx0, &lx0) && le(&lx1, &bx1) && le(&by0, &ly0) && le(&ly1, &by1) {
            total
        } else {
            Count::between(LogScalar::zero(), total.hi)
        }
    }

    /// Points of the level in the closed square `[−l, l]²`.
    ///
    /// For analytic levels the square is compared with the level's own
    /// heights: it holds the level when `l ≥ top` and misses it when
    /// `l < h`. Values that agree to working precision count as equal, which
    /// is what makes the level-schedule squares `l = top` resolvable once
    /// `top/h` is below the precision of `log h`.
    pub fn count_centered(&self, l: &LogScalar) -> Count {
        let a = match &self.geom {
            LevelGeom::Analytic(a) => a,
            _ => return self.count_in(&Box::centered(l)),
        };
        if l < &self.h && !l.indistinct(&self.h) {
            return Count::zero();
        }
        let narrow = match a.shape {
            AnalyticShape::Cone { tan_half, .. } | AnalyticShape::Band { tan_half } => tan_half < 1.0,
            AnalyticShape::Strip { width } => l >= &LogScalar::from_u64(width),
        };
        if narrow && (l >= &self.top || l.indistinct(&self.top)) {
            return a.total.clone();
        }
        Count::between(LogScalar::zero(), a.total.hi.clone())
    }

    /// Points of the level in a tube: exact where the level is scannable,
    /// otherwise a count interval.
    pub fn slice(&self, tube: &Tube, fattened: bool, theta: Option<f64>) -> LevelSlice {
        match &self.geom {
            LevelGeom::Cone(c) => LevelSlice::Exact(c.slice(tube)),
            LevelGeom::Strip(s) => LevelSlice::Exact(strip_slice(s, tube)),
            LevelGeom::Band(b) => match b.slice(tube) {
                Some(p) => LevelSlice::Exact(p),
                None => {
                    let (lo, hi, side) = if b.y0.bits() < 1000 {
                        b.slice_interval(tube)
                    } else {
                        let rows = b.rows.to_f64().unwrap_or(f64::INFINITY);
                        band_direction_interval(tube, b.tan_half, rows)
                    };
                    interval_from_f64(lo, hi, side)
                }
            },
            LevelGeom::Analytic(a) => self.analytic_slice(a, tube, fattened, theta),
        }
    }

    fn analytic_slice(&self, a: &AnalyticLevel, tube: &Tube, fattened: bool, theta: Option<f64>) -> LevelSlice {
        let none = LevelSlice::Interval {
            lo: LogScalar::zero(),
            hi: LogScalar::zero(),
            side: LogScalar::from_u64(2),
        };
        let phi = tube.direction_angle();
        match a.shape {
            AnalyticShape::Cone { tan_half, .. } => {
                let n = self.n_u64().expect("cone chunk height fits");
                let side = LogScalar::from_u64(2 * n + 2);
                let inside = phi.abs() < theta.unwrap_or(0.0) / 2.0;
                if inside {
                    let lo = if fattened { n.saturating_sub(1) } else { 0 };
                    return LevelSlice::Interval {
                        lo: LogScalar::from_u64(lo),
                        hi: LogScalar::from_u64(2 * n + 2),
                        side,
                    };
                }
                if tube_meets_heights(tube, tan_half, &self.h) {
                    return LevelSlice::Interval {
                        lo: LogScalar::zero(),
                        hi: LogScalar::from_u64(2 * n + 2),
                        side,
                    };
                }
                none
            }
            AnalyticShape::Strip { width } => match tube {
                Tube::Vertical { x0 } => {
                    let x = x0.ceil();
                    if x >= 0.0 && x < width as f64 {
                        LevelSlice::Interval {
                            lo: self.n.clone(),
                            hi: self.n.clone(),
                            side: ls_add(&self.n, &LogScalar::one()),
                        }
                    } else {
                        none
                    }
                }
                Tube::Sloped { .. } => {
                    let half = width as f64;
                    if tube_meets_heights(tube, 0.0, &self.h) || half > 1e300 {
                        LevelSlice::Interval {
                            lo: LogScalar::zero(),
                            hi: a.total.hi.clone(),
                            side: self.n.clone(),
                        }
                    } else {
                        none
                    }
                }
            },
            AnalyticShape::Band { tan_half } => {
                let rows = self.n.clone();
                let (len, tdir) = match tube {
                    Tube::Vertical { .. } => (1.0f64, 0.0f64),
                    Tube::Sloped { u, .. } => ((1.0 + u * u).sqrt(), (-1.0 / u).abs()),
                };
                let side = ls_mul_f64(&rows, tdir.max(1.0) + len).unwrap_or_else(|_| rows.clone());
                if phi.abs() < tan_half.atan() {
                    let lo = if len.floor() >= 1.0 {
                        ls_mul_f64(&rows, len.floor()).unwrap_or_else(|_| rows.clone())
                    } else {
                        LogScalar::zero()
                    };
                    LevelSlice::Interval {
                        lo,
                        hi: ls_mul_f64(&rows, len.ceil()).unwrap_or_else(|_| rows.clone()),
                        side,
                    }
                } else {
                    none
                }
            }
        }
    }
}

fn interval_from_f64(lo: f64, hi: f64, side: f64) -> LevelSlice {
    let f = |v: f64| {
        if v < 1.0 {
            LogScalar::zero()
        } else {
            LogScalar::from_f64(v).unwrap_or_else(|_| LogScalar::zero())
        }
    };
    LevelSlice::Interval {
        lo: f(lo),
        hi: f(hi),
        side: LogScalar::from_f64(side.max(2.0)).unwrap_or_else(|_| LogScalar::from_u64(2)),
    }
}

fn band_direction_interval(tube: &Tube, tan_half: f64, rows: f64) -> (f64, f64, f64) {
    let (len, tdir) = match tube {
        Tube::Vertical { .. } => (1.0f64, 0.0f64),
        Tube::Sloped { u, .. } => ((1.0 + u * u).sqrt(), (-1.0 / u).abs()),
    };
    let side = rows.max(rows * tdir + len);
    if tube.direction_angle().abs() < tan_half.atan() {
        (rows * len.floor(), rows * len.ceil(), side)
    } else {
        (0.0, 0.0, side)
    }
}

/// Whether a tube reaches the region `|x| ≤ y·tan_half + 2` at some height
/// `y ≥ h`, for a huge `h`.
fn tube_meets_heights(tube: &Tube, tan_half: f64, h: &LogScalar) -> bool {
    let (slope, x_int) = match *tube {
        Tube::Vertical { x0 } => (0.0, x0),
        Tube::Sloped { u, v } => {
            let s = (1.0 + 1.0 / (u * u)).sqrt();
            (-1.0 / u, u * v * s)
        }
    };
    let excess = slope.abs() - tan_half;
    if excess <= 0.0 {
        return true;
    }
    let y_max = (x_int.abs() + 4.0) / excess;
    match LogScalar::from_f64(y_max.max(1.0)) {
        Ok(v) => &v >= h,
        Err(_) => true,
    }
}

/// Strip-frame slice by scanning the chunks the tube can reach.
fn strip_slice(s: &StripLevel, tube: &Tube) -> Vec<(i64, i64)> {
    if let Tube::Vertical { x0 } = *tube {
        return s.band_slice(x0);
    }
    let mut out = Vec::new();
    for j in 0..s.k {
        let (cx0, cy0) = (j * s.w, s.h + j * s.n);
        if !tube.may_meet_rect(cx0 as f64, (cx0 + s.w) as f64, cy0 as f64, (cy0 + s.n) as f64) {
            continue;
        }
        for y in cy0..cy0 + s.n {
            for x in cx0..cx0 + s.w {
                if tube.contains((x as f64, y as f64)) {
                    out.push((x, y));
                }
            }
        }
    }
    out
}

/// A constructed set: parameters plus its levels.
#[derive(Clone, Debug)]
pub struct ChunkSet {
    pub kind: SetKind,
    pub params: SetParams,
    pub levels: Vec<Level>,
}

impl ChunkSet {
    pub fn build(params: &SetParams) -> Result<ChunkSet> {
        params.validate()?;
        match *params {
            SetParams::IntroCone { theta, k_lo, k_hi } => build_intro_cone(theta, k_lo, k_hi),
            SetParams::Strip {
                u0,
                k,
                w,
                n1,
                h1,
                levels,
                growth,
            } => build_strip_set(u0, k, w, n1, h1, levels, growth),
            SetParams::Cone {
                theta,
                w,
                n1,
                h1,
                levels,
                growth,
            } => build_cone_set(theta, w, n1, h1, levels, growth),
            SetParams::FattenedCone {
                theta,
                eps,
                w,
                n1,
                h1,
                levels,
                growth,
            } => build_fattened_cone_set(theta, eps, w, n1, h1, levels, growth),
        }
    }

    pub fn level(&self, m: u32) -> Option<&Level> {
        self.levels.iter().find(|l| l.m == m)
    }

    pub fn is_fattened(&self) -> bool {
        self.kind == SetKind::FattenedCone
    }

    /// Level-by-level slices of the set by a tube.
    pub fn slices(&self, tube: &Tube) -> Vec<LevelSlice> {
        let theta = self.params.theta();
        self.levels
            .iter()
            .map(|l| l.slice(tube, self.is_fattened(), theta))
            .collect()
    }

    /// Row-by-row enumeration of the points in an exact box; refuses levels
    /// that are not exact.
    pub fn points_in_box(&self, b: &Box) -> Result<Vec<(i64, i64)>> {
        let e = b
            .as_exact()
            .ok_or_else(|| ConstructionError::CapacityExceeded("box is not exact".into()))?;
        let (x0, x1, y0, y1) = (
            clamp_i64(&e.x0),
            clamp_i64(&e.x1()),
            clamp_i64(&e.y0),
            clamp_i64(&e.y1()),
        );
        let mut out = Vec::new();
        for l in &self.levels {
            if l.count_in(b).hi.is_zero() {
                continue;
            }
            match &l.geom {
                LevelGeom::Cone(c) => out.extend(c.points_in_box(x0, x1, y0, y1)),
                LevelGeom::Strip(s) => out.extend(s.points_in_box(x0, x1, y0, y1)),
                LevelGeom::Band(bl) => out.extend(bl.points_in_box(x0, x1, y0, y1).ok_or_else(|| {
                    ConstructionError::CapacityExceeded(format!("level {} exceeds machine integers", l.m))
                })?),
                LevelGeom::Analytic(_) => {
                    return Err(ConstructionError::CapacityExceeded(format!(
                        "level {} is not exact",
                        l.m
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .map(|l| {
                serde_json::json!({
                    "m": l.m,
                    "h": l.h,
                    "H": l.big_h,
                    "top": l.top,
                    "n": l.n,
                    "K": l.k,
                    "exact": l.is_exact(),
                    "chunks": chunks_of(l),
                })
            })
            .collect();
        serde_json::json!({
            "kind": self.kind,
            "params": self.params,
            "levels": levels,
        })
    }
}

#[derive(Serialize)]
struct ChunkWire {
    x0: Coord,
    y0: LogScalar,
    w: f64,
    n: LogScalar,
    #[serde(skip_serializing_if = "Option::is_none")]
    tan: Option<f64>,
}

fn chunks_of(l: &Level) -> Option<Vec<ChunkWire>> {
    match &l.geom {
        LevelGeom::Cone(c) if c.k <= CHUNK_LIST_CAP => Some(
            (1..=c.k)
                .map(|k| {
                    let t = c.tangent(k);
                    let y = c.base(k);
                    ChunkWire {
                        x0: Coord::from_i64(crate::lattice::ceil_lin(y, t, -c.eps)),
                        y0: LogScalar::from_u64(y as u64),
                        w: c.row_width as f64,
                        n: LogScalar::from_u64(c.n as u64),
                        tan: Some(t),
                    }
                })
                .collect(),
        ),
        LevelGeom::Strip(s) if s.k <= CHUNK_LIST_CAP => Some(
            (0..s.k)
                .map(|j| ChunkWire {
                    x0: Coord::from_i64(j * s.w),
                    y0: LogScalar::from_u64((s.h + j * s.n) as u64),
                    w: s.w as f64,
                    n: LogScalar::from_u64(s.n as u64),
                    tan: None,
                })
                .collect(),
        ),
        LevelGeom::Band(b) => {
            let (x0, width) = b.base_row();
            Some(vec![ChunkWire {
                x0: Coord::from_bigint(&x0),
                y0: ls_make(b.y0.magnitude().clone()),
                w: width.to_f64().unwrap_or(f64::INFINITY),
                n: ls_make(b.rows.magnitude().clone()),
                tan: None,
            }])
        }
        _ => None,
    }
}

/// `h_{m+1}` from `H_m`; must clear the previous level's top row.
fn grow(policy: GrowthPolicy, big_h: &LogScalar, prev_top: &LogScalar) -> Result<LogScalar> {
    let next = match policy {
        GrowthPolicy::PaperExponential => ls_exp(big_h).map_err(scalar_err)?,
        GrowthPolicy::Geometric { ratio } => match big_h.to_biguint() {
            Some(v) if ratio.fract() == 0.0 && ratio < 1e15 => ls_make(v * BigUint::from(ratio as u64)),
            Some(v) if v.bits() < 50 => round_f64(v.to_f64().unwrap() * ratio)?,
            _ => ls_mul_f64(big_h, ratio).map_err(scalar_err)?,
        },
        GrowthPolicy::Power { exponent } => match big_h.to_biguint() {
            Some(v) if exponent.fract() == 0.0 && (v.bits() as f64) * exponent < 4000.0 => {
                ls_make(v.pow(exponent as u32))
            }
            Some(v) if (v.bits() as f64) * exponent < 50.0 => round_f64(v.to_f64().unwrap().powf(exponent))?,
            _ => ls_pow_f64(big_h, exponent).map_err(scalar_err)?,
        },
    };
    if &next < prev_top {
        return invalid(format!(
            "growth policy {policy:?} gives h = {} below the previous level's top {}",
            next.repr(),
            prev_top.repr()
        ));
    }
    Ok(next)
}

fn round_f64(v: f64) -> Result<LogScalar> {
    Ok(LogScalar::from_u64(v.round() as u64))
}

fn scalar_err(e: crate::scalars::ScalarError) -> ConstructionError {
    match e {
        crate::scalars::ScalarError::CapacityExceeded(m) => ConstructionError::CapacityExceeded(m.to_string()),
        crate::scalars::ScalarError::Domain(m) => ConstructionError::InvalidParameter(m.to_string()),
    }
}

fn cone_type_level(m: u32, h: &LogScalar, n: u64, w: u64, theta: f64, eps: f64, fattened: bool) -> Level {
    let row_width = if fattened {
        (w as f64 + 2.0 * eps).ceil() as u64
    } else {
        w
    };
    let tan_half = (theta / 2.0).tan();
    let nn = LogScalar::from_u64(n);
    if let Some(hv) = h.to_u64().filter(|&v| v <= CONE_EXACT_TOP) {
        let c = ConeLevel::new(theta, eps, w, n, hv);
        let k = LogScalar::from_u64(c.k as u64);
        let top = LogScalar::from_u64(c.top() as u64);
        let big_h = LogScalar::from_u64((c.top() - c.n) as u64);
        if (c.top() as u64) <= CONE_EXACT_TOP {
            return Level {
                m,
                h: h.clone(),
                big_h,
                top,
                n: nn,
                k,
                geom: LevelGeom::Cone(c),
            };
        }
        let per_chunk = BigUint::from(n * row_width);
        let total = ls_make(BigUint::from(c.k as u64) * &per_chunk);
        let lo = ls_make(BigUint::from((c.k as u64).saturating_sub(2)) * &per_chunk);
        return Level {
            m,
            h: h.clone(),
            big_h,
            top,
            n: nn,
            k,
            geom: LevelGeom::Analytic(AnalyticLevel {
                shape: AnalyticShape::Cone {
                    tan_half,
                    eps,
                    fattened,
                },
                total: Count::between(lo, total),
            }),
        };
    }
    let k = km_estimate(h, n, w, theta).estimate;
    let span = ls_mul(&k, &nn);
    let top = ls_add(h, &span);
    let big_h = ls_add(h, &ls_sub(&span, &nn).unwrap_or_else(|_| LogScalar::zero()));
    let total = widen(&ls_mul(&k, &LogScalar::from_u64(n * row_width)));
    let lo = match k.to_f64() {
        Some(kf) if kf > 2.0 => ls_mul_f64(&total.lo, 1.0 - 2.0 / kf).unwrap_or_else(|_| LogScalar::zero()),
        Some(_) => LogScalar::zero(),
        None => total.lo.clone(),
    };
    Level {
        m,
        h: h.clone(),
        big_h,
        top,
        n: nn,
        k,
        geom: LevelGeom::Analytic(AnalyticLevel {
            shape: AnalyticShape::Cone {
                tan_half,
                eps,
                fattened,
            },
            total: Count::between(lo, total.hi),
        }),
    }
}

fn build_cone_type(
    theta: f64,
    eps: f64,
    fattened: bool,
    w: u64,
    n1: u64,
    h1: u64,
    levels: u32,
    growth: GrowthPolicy,
) -> Result<Vec<Level>> {
    let mut out: Vec<Level> = Vec::with_capacity(levels as usize);
    let mut h = LogScalar::from_u64(h1);
    for m in 1..=levels {
        if let Some(prev) = out.last() {
            h = grow(growth, &prev.big_h, &prev.top)?;
        }
        let n = n1 + (m as u64 - 1);
        out.push(cone_type_level(m, &h, n, w, theta, eps, fattened));
    }
    Ok(out)
}

pub fn build_cone_set(theta: f64, w: u64, n1: u64, h1: u64, levels: u32, growth: GrowthPolicy) -> Result<ChunkSet> {
    let params = SetParams::Cone {
        theta,
        w,
        n1,
        h1,
        levels,
        growth,
    };
    params.validate()?;
    Ok(ChunkSet {
        kind: SetKind::Cone,
        levels: build_cone_type(theta, 0.0, false, w, n1, h1, levels, growth)?,
        params,
    })
}

pub fn build_fattened_cone_set(
    theta: f64,
    eps: f64,
    w: u64,
    n1: u64,
    h1: u64,
    levels: u32,
    growth: GrowthPolicy,
) -> Result<ChunkSet> {
    let params = SetParams::FattenedCone {
        theta,
        eps,
        w,
        n1,
        h1,
        levels,
        growth,
    };
    params.validate()?;
    Ok(ChunkSet {
        kind: SetKind::FattenedCone,
        levels: build_cone_type(theta, eps, true, w, n1, h1, levels, growth)?,
        params,
    })
}

pub fn build_strip_set(
    u0: Option<f64>,
    k: u64,
    w: u64,
    n1: u64,
    h1: u64,
    levels: u32,
    growth: GrowthPolicy,
) -> Result<ChunkSet> {
    let params = SetParams::Strip {
        u0,
        k,
        w,
        n1,
        h1,
        levels,
        growth,
    };
    params.validate()?;
    let mut out: Vec<Level> = Vec::with_capacity(levels as usize);
    let mut h = LogScalar::from_u64(h1);
    let kk = LogScalar::from_u64(k);
    for m in 1..=levels {
        if let Some(prev) = out.last() {
            h = grow(growth, &prev.big_h, &prev.top)?;
        }
        let n = n1 + (m as u64 - 1);
        let nn = LogScalar::from_u64(n);
        let span = ls_mul(&kk, &nn);
        let top = ls_add(&h, &span);
        let exact = top
            .to_u64()
            .filter(|&t| t <= STRIP_EXACT_TOP && k.checked_mul(w).is_some_and(|v| v <= STRIP_EXACT_TOP));
        let geom = match (exact, h.to_u64()) {
            (Some(_), Some(hv)) => LevelGeom::Strip(StripLevel {
                h: hv as i64,
                n: n as i64,
                w: w as i64,
                k: k as i64,
            }),
            _ => LevelGeom::Analytic(AnalyticLevel {
                shape: AnalyticShape::Strip { width: k * w },
                total: Count::exact(ls_make(BigUint::from(k) * BigUint::from(w) * BigUint::from(n))),
            }),
        };
        out.push(Level {
            m,
            h: h.clone(),
            big_h: top.clone(),
            top,
            n: nn,
            k: kk.clone(),
            geom,
        });
    }
    Ok(ChunkSet {
        kind: SetKind::Strip,
        params,
        levels: out,
    })
}

pub fn build_intro_cone(theta: f64, k_lo: u32, k_hi: u32) -> Result<ChunkSet> {
    let params = SetParams::IntroCone { theta, k_lo, k_hi };
    params.validate()?;
    let tan_half = (theta / 2.0).tan();
    let mut levels = Vec::new();
    for k in k_lo..=k_hi {
        let y_bits = 1u64 << (k + 1);
        let level = if y_bits < crate::scalars::EXACT_BITS {
            let band = BandLevel::new(intro::tower2(k + 1), intro::tower2(k), tan_half);
            let h = ls_make(band.y0.magnitude().clone());
            let n = ls_make(band.rows.magnitude().clone());
            let top = ls_make(band.top().magnitude().clone());
            Level {
                m: k,
                h,
                big_h: top.clone(),
                top,
                n,
                k: LogScalar::one(),
                geom: LevelGeom::Band(band),
            }
        } else {
            let ln2 = std::f64::consts::LN_2;
            let ln_y = y_bits as f64 * ln2;
            let ln_n = (1u64 << k) as f64 * ln2;
            let h = LogScalar::from_ln(ln_y).map_err(scalar_err)?;
            let n = LogScalar::from_ln(ln_n).map_err(scalar_err)?;
            let top = ls_add(&h, &n);
            let ln_total = ln_n + ln_y + (2.0 * tan_half).ln();
            let total = LogScalar::from_ln(ln_total)
                .map_err(scalar_err)?
                .with_extra_error(1e-12);
            Level {
                m: k,
                h,
                big_h: top.clone(),
                top,
                n,
                k: LogScalar::one(),
                geom: LevelGeom::Analytic(AnalyticLevel {
                    shape: AnalyticShape::Band { tan_half },
                    total: widen(&total),
                }),
            }
        };
        levels.push(level);
    }
    Ok(ChunkSet {
        kind: SetKind::IntroCone,
        params,
        levels,
    })
}

/// Explicit points of the selected levels.
pub fn materialize(cs: &ChunkSet, levels: RangeInclusive<u32>) -> Result<PointSet> {
    let mut budget = 0u128;
    let chosen: Vec<&Level> = cs.levels.iter().filter(|l| levels.contains(&l.m)).collect();
    for l in &chosen {
        let t = match &l.geom {
            LevelGeom::Analytic(_) => {
                return Err(ConstructionError::CapacityExceeded(format!(
                    "level {} has no exact coordinates",
                    l.m
                )))
            }
            LevelGeom::Band(b) if b.top().bits() > 62 => {
                return Err(ConstructionError::CapacityExceeded(format!(
                    "level {} exceeds machine integers",
                    l.m
                )))
            }
            _ => l.total().value().and_then(|v| v.to_u128()).unwrap_or(u128::MAX),
        };
        budget = budget.saturating_add(t);
    }
    if budget > MATERIALIZE_CAP {
        return Err(ConstructionError::CapacityExceeded(format!(
            "{budget} points exceed the materialization cap of {MATERIALIZE_CAP}"
        )));
    }
    let mut pts = Vec::with_capacity(budget as usize);
    for l in chosen {
        match &l.geom {
            LevelGeom::Cone(c) => pts.extend(c.points()),
            LevelGeom::Strip(s) => pts.extend(s.points()),
            LevelGeom::Band(b) => {
                let f = b.half_width(&(b.top() - 1)).to_i64().expect("checked") + 1;
                let (y0, y1) = (b.y0.to_i64().expect("checked"), b.top().to_i64().expect("checked"));
                pts.extend(b.points_in_box(-f, f + 1, y0, y1).expect("checked"));
            }
            LevelGeom::Analytic(_) => unreachable!(),
        }
    }
    Ok(PointSet::new(pts))
}

/// `|E ∩ b|`, exact when every level meeting the box is exact.
pub fn chunk_count(cs: &ChunkSet, b: &Box) -> Count {
    cs.levels.iter().fold(Count::zero(), |acc, l| acc.add(&l.count_in(b)))
}

/// Points in the closed square `[−l, l]²`.
pub fn chunk_count_centered(cs: &ChunkSet, l: &LogScalar) -> Count {
    cs.levels
        .iter()
        .fold(Count::zero(), |acc, lv| acc.add(&lv.count_centered(l)))
}

/// Strip-frame points mapped to the plane, with the strip's tube direction
/// given by the projecting-line slope `u0`.
pub fn strip_world_points(points: &PointSet, u0: f64) -> Vec<(f64, f64)> {
    let phi = (-u0).atan();
    let (s, c) = phi.sin_cos();
    points
        .points()
        .iter()
        .map(|&(x, y)| {
            let (x, y) = (x as f64, y as f64);
            (x * c + y * s, -x * s + y * c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const G10: GrowthPolicy = GrowthPolicy::Geometric { ratio: 10.0 };

    fn count_u(cs: &ChunkSet, b: &Box) -> u128 {
        chunk_count(cs, b).value().unwrap().to_u128().unwrap()
    }

    #[test]
    fn strip_example() {
        let cs = build_strip_set(None, 3, 2, 2, 10, 1, G10).unwrap();
        let p = materialize(&cs, 1..=1).unwrap();
        assert_eq!(p.len(), 12);
        let json = cs.to_json();
        let chunks = json["levels"][0]["chunks"].as_array().unwrap();
        let corners: Vec<(String, String)> = chunks
            .iter()
            .map(|c| (c["x0"]["magnitude"]["exact"].to_string(), c["y0"]["exact"].to_string()))
            .collect();
        assert_eq!(corners[1], ("\"2\"".into(), "\"12\"".into()));
        assert_eq!(corners[2], ("\"4\"".into(), "\"14\"".into()));
        assert!(materialize(&cs, std::ops::RangeInclusive::new(2, 1))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn strip_single_chunk_ladder() {
        let cs = build_strip_set(None, 1, 3, 2, 10, 3, G10).unwrap();
        for l in &cs.levels {
            assert_eq!(l.total().value().unwrap(), BigUint::from(3 * l.n_u64().unwrap()));
        }
    }

    #[test]
    fn strip_paper_exponential_levels() {
        let cs = build_strip_set(None, 3, 2, 2, 10, 3, GrowthPolicy::PaperExponential).unwrap();
        assert_eq!(cs.levels[1].h.depth(), 1);
        assert!((cs.levels[1].h.r() - 16.0).abs() < 1e-12);
        assert_eq!(cs.levels[2].h.depth(), 1);
        assert!(cs.levels[2].h.r() > 8e6);
        assert_eq!(cs.levels[2].total().value().unwrap(), BigUint::from(24u32));
    }

    #[test]
    fn cone_level_one() {
        let cs = build_cone_set(0.5, 2, 2, 100, 1, G10).unwrap();
        let l = &cs.levels[0];
        let k = l.k.to_u64().unwrap();
        assert!((31..=34).contains(&k));
        let LevelGeom::Cone(c) = &l.geom else { panic!() };
        let all = Box::lattice(-200, 0, 400);
        assert_eq!(count_u(&cs, &all), c.points().len() as u128);
        let one = Box::lattice(-25, 100, 2);
        assert_eq!(count_u(&cs, &one), 4);
        assert!(chunk_count(&cs, &Box::lattice(1000, 1000, 5)).lo.is_zero());
    }

    #[test]
    fn tiny_angle_two_chunks() {
        let cs = build_cone_set(0.039, 2, 2, 100, 1, G10).unwrap();
        assert_eq!(cs.levels[0].k.to_u64(), Some(2));
    }

    #[test]
    fn levels_separated_under_all_policies() {
        for g in [
            G10,
            GrowthPolicy::Power { exponent: 1.5 },
            GrowthPolicy::PaperExponential,
        ] {
            for cs in [
                build_cone_set(0.5, 2, 2, 100, 4, g).unwrap(),
                build_strip_set(None, 5, 2, 2, 10, 4, g).unwrap(),
            ] {
                for pair in cs.levels.windows(2) {
                    assert!(pair[1].h > pair[0].big_h);
                    assert!(pair[1].h >= pair[0].top);
                }
            }
        }
    }

    #[test]
    fn paper_exponential_cone_is_analytic_above_level_one() {
        let cs = build_cone_set(0.5, 2, 2, 100, 3, GrowthPolicy::PaperExponential).unwrap();
        assert!(cs.levels[0].is_exact());
        assert!(!cs.levels[1].is_exact());
        assert_eq!(cs.levels[2].h.depth(), 1);
        assert!(cs.levels[2].h.r() > 1e70);
        assert!(matches!(
            materialize(&cs, 1..=2),
            Err(ConstructionError::CapacityExceeded(_))
        ));
        assert!(materialize(&cs, 1..=1).is_ok());
    }

    #[test]
    fn invalid_parameters() {
        assert!(build_cone_set(-1.0, 2, 2, 100, 1, G10).is_err());
        assert!(build_cone_set(0.5, 0, 2, 100, 1, G10).is_err());
        assert!(build_fattened_cone_set(0.5, 2.0, 2, 2, 100, 1, G10).is_err());
        assert!(build_strip_set(None, 0, 2, 2, 10, 1, G10).is_err());
        assert!(build_cone_set(0.5, 2, 2, 100, 2, GrowthPolicy::Geometric { ratio: 1.0 }).is_err());
        assert!(build_intro_cone(0.2, 3, 2).is_err());
    }

    #[test]
    fn surrogate_overlap_is_refused() {
        let r = build_cone_set(0.5, 2, 2, 100, 2, GrowthPolicy::Geometric { ratio: 1.005 });
        assert!(matches!(r, Err(ConstructionError::InvalidParameter(_))));
    }

    #[test]
    fn fattened_level_one_count() {
        let cs = build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 1, G10).unwrap();
        let LevelGeom::Cone(c) = &cs.levels[0].geom else {
            panic!()
        };
        assert_eq!(c.row_width, 3);
        let total = count_u(&cs, &Box::lattice(-300, 0, 600));
        assert_eq!(total, c.points().len() as u128);
        let ideal = (c.k * c.n * 3) as u128;
        assert!(total <= ideal && total + 2 * 3 * c.n as u128 >= ideal);
    }

    #[test]
    fn intro_levels() {
        let cs = build_intro_cone(0.2, 1, 2).unwrap();
        let p = materialize(&cs, 2..=2).unwrap();
        assert_eq!(cs.levels[1].total().value().unwrap(), BigUint::from(p.len()));
        let big = build_intro_cone(0.2, 11, 12).unwrap();
        assert!(!big.levels[0].is_exact());
        assert!(materialize(&big, 11..=11).is_err());
    }

    #[test]
    fn random_boxes_match_enumeration_small_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sets = [
            build_strip_set(None, 5, 2, 2, 10, 3, G10).unwrap(),
            build_cone_set(0.5, 2, 2, 100, 2, G10).unwrap(),
            build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 2, G10).unwrap(),
            build_intro_cone(0.2, 1, 3).unwrap(),
        ];
        for cs in &sets {
            let (_, _, _, y1) = cs.levels.last().unwrap().bbox();
            let ymax = y1.to_i64().unwrap();
            for _ in 0..100 {
                let side = rng.random_range(1..ymax.min(4000));
                let y0 = rng.random_range(-10..ymax);
                let x0 = rng.random_range(-ymax / 2..ymax / 2);
                let b = Box::lattice(x0, y0, side as u64);
                let want = cs.points_in_box(&b).unwrap().len() as u128;
                assert_eq!(count_u(cs, &b), want);
            }
        }
    }

    #[test]
    fn params_json_round_trip_and_strictness() {
        let p = SetParams::FattenedCone {
            theta: 0.5,
            eps: 0.5,
            w: 2,
            n1: 2,
            h1: 100,
            levels: 3,
            growth: G10,
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<SetParams>(&s).unwrap(), p);
        let bad = s.replace("\"eps\"", "\"epsilon\"");
        assert!(serde_json::from_str::<SetParams>(&bad).is_err());
    }
}
