//! Ratio traces `log|E ∩ C| / log‖C‖` along box schedules.

use num_bigint::BigInt;
use serde::Serialize;

use super::DimensionError;
use crate::constructions::{
    chunk_count_centered, ChunkSet, Count, Level, LevelGeom, LevelSlice, PointSet, SetKind, SetParams,
};
use crate::geometry::{Box, Coord, Tube};
use crate::numfmt::sig12;
use crate::scalars::{log_ratio, ls_mul, ls_mul_f64, ls_sub, LogRatio, LogScalar, ZeroNumerator};

/// A set given symbolically or explicitly.
#[derive(Clone, Copy, Debug)]
pub enum SetRef<'a> {
    Chunks(&'a ChunkSet),
    Points(&'a PointSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Exact,
    Analytic,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub level: Option<u32>,
    pub scale: LogScalar,
    pub count: Count,
    pub ratio_lo: LogRatio,
    pub ratio_hi: LogRatio,
    pub mode: Mode,
}

impl TraceRecord {
    pub fn new(level: Option<u32>, scale: LogScalar, count: Count) -> Result<Self, DimensionError> {
        let ratio_lo = log_ratio(&count.lo, &scale, ZeroNumerator::RatioZero)?;
        let ratio_hi = log_ratio(&count.hi, &scale, ZeroNumerator::RatioZero)?;
        let mode = if count.is_exact() && scale.is_exact() {
            Mode::Exact
        } else {
            Mode::Analytic
        };
        Ok(TraceRecord {
            level,
            scale,
            count,
            ratio_lo,
            ratio_hi,
            mode,
        })
    }

    pub fn with_ratio(level: Option<u32>, scale: LogScalar, count: Count, ratio: LogRatio) -> Self {
        TraceRecord {
            level,
            scale,
            count,
            ratio_lo: ratio,
            ratio_hi: ratio,
            mode: Mode::Analytic,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DimensionTrace {
    pub records: Vec<TraceRecord>,
}

impl DimensionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Upper ratio endpoints in record order.
    pub fn ratios_hi(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ratio_hi.value).collect()
    }

    pub fn ratios_lo(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ratio_lo.value).collect()
    }

    /// `level,scale_repr,count_lo,count_hi,ratio_lo,ratio_hi,mode`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,scale_repr,count_lo,count_hi,ratio_lo,ratio_hi,mode\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.level.map(|l| l.to_string()).unwrap_or_default(),
                r.scale.repr(),
                r.count.lo.repr(),
                r.count.hi.repr(),
                sig12(r.ratio_lo.value),
                sig12(r.ratio_hi.value),
                r.mode.as_str()
            ));
        }
        s
    }
}

/// Closed-box half sides `l_m`: the last row of each exact level, the
/// level top otherwise.
pub fn mass_scales(cs: &ChunkSet) -> Vec<(u32, LogScalar)> {
    cs.levels
        .iter()
        .map(|l| {
            let s = if l.top.is_exact() {
                ls_sub(&l.top, &LogScalar::one()).unwrap_or_else(|_| l.top.clone())
            } else {
                l.top.clone()
            };
            (l.m, s)
        })
        .collect()
}

fn two_l(l: &LogScalar) -> LogScalar {
    ls_mul(l, &LogScalar::from_u64(2))
}

/// Counts over the closed squares `[−l, l]²`; ratio `log count / log 2l`.
pub fn mass_dim_trace(set: SetRef, scales: &[LogScalar]) -> Result<DimensionTrace, DimensionError> {
    let mut trace = DimensionTrace::default();
    for (i, l) in scales.iter().enumerate() {
        if l.is_zero() {
            return Err(DimensionError::InvalidParameter("mass scales must be >= 1".into()));
        }
        if i > 0 && l <= &scales[i - 1] {
            return Err(DimensionError::InvalidParameter("mass scales must increase".into()));
        }
        let count = match set {
            SetRef::Chunks(cs) => chunk_count_centered(cs, l),
            SetRef::Points(ps) => {
                let lv = l.to_i64().unwrap_or(i64::MAX / 4).min(i64::MAX / 4);
                Count::exact(LogScalar::from_u64(ps.count_centered(lv)))
            }
        };
        trace.records.push(TraceRecord::new(None, two_l(l), count)?);
    }
    Ok(trace)
}

#[derive(Clone, Debug)]
pub enum BoxSchedule {
    DesignatedLevels,
    ExplicitBoxes(Vec<Box>),
}

/// One box per level covering the whole level; see the module docs of
/// `constructions` for the level layouts.
pub fn designated_boxes(cs: &ChunkSet) -> Result<Vec<(u32, Box)>, DimensionError> {
    let mut out = Vec::new();
    for l in &cs.levels {
        let (side, x0) = match cs.kind {
            SetKind::Cone | SetKind::FattenedCone => {
                let side = ls_mul(&l.k, &l.n);
                let x0 = match &l.geom {
                    LevelGeom::Cone(c) => Coord::from_i64(c.x_min()),
                    _ => l.bbox().0,
                };
                (side, x0)
            }
            SetKind::Strip => (ls_mul(&l.k, &l.n), Coord::from_i64(0)),
            SetKind::IntroCone => {
                let side = l.n.clone();
                let x0 = match side.to_biguint() {
                    Some(v) => Coord::from_bigint(&-BigInt::from(v / 2u32)),
                    None => Coord::negative(ls_mul_f64(&side, 0.5).map_err(DimensionError::from)?),
                };
                (side, x0)
            }
        };
        if side <= LogScalar::one() {
            return Err(DimensionError::InvalidParameter(format!(
                "designated box at level {} has side {} <= 1",
                l.m,
                side.repr()
            )));
        }
        let y0 = Coord::positive(l.h.clone());
        out.push((l.m, Box::new(x0, y0, side)?));
    }
    Ok(out)
}

/// Count of an analytic level in its own designated box. The box spans the
/// level's heights exactly; whether it spans the level's width is decided
/// from `Kn/top = 1 − e^{−θn/w}` for cones, because `log(top)` and
/// `log(Kn)` need not be distinguishable.
fn designated_own(cs: &ChunkSet, l: &Level, b: &Box) -> Count {
    let (theta, w) = match cs.params {
        SetParams::Cone { theta, w, .. } | SetParams::FattenedCone { theta, w, .. } => (theta, w as f64),
        SetParams::Strip { k, w, .. } => {
            let wide = ls_mul(&l.n, &LogScalar::from_u64(k)) >= LogScalar::from_u64(k * w);
            return if wide { l.total() } else { l.count_in(b) };
        }
        SetParams::IntroCone { .. } => return l.count_in(b),
    };
    let n = match l.n_u64() {
        Some(n) => n as f64,
        None => return l.count_in(b),
    };
    let span = -(-theta * n / w).exp_m1();
    if span >= 2.0 * (theta / 2.0).tan() * (1.0 + 1e-9) {
        l.total()
    } else {
        Count::between(LogScalar::zero(), l.total().hi)
    }
}

/// Counting ratios `log|E ∩ C| / log‖C‖` over a box schedule.
pub fn counting_dim_trace(cs: &ChunkSet, schedule: &BoxSchedule) -> Result<DimensionTrace, DimensionError> {
    let boxes: Vec<(Option<u32>, Box)> = match schedule {
        BoxSchedule::DesignatedLevels => designated_boxes(cs)?.into_iter().map(|(m, b)| (Some(m), b)).collect(),
        BoxSchedule::ExplicitBoxes(v) => v.iter().cloned().map(|b| (None, b)).collect(),
    };
    let mut trace = DimensionTrace::default();
    for (m, b) in boxes {
        let count = cs.levels.iter().fold(Count::zero(), |acc, l| {
            let c = if Some(l.m) == m && !l.is_exact() {
                designated_own(cs, l, &b)
            } else {
                l.count_in(&b)
            };
            acc.add(&c)
        });
        trace.records.push(TraceRecord::new(m, b.side.clone(), count)?);
    }
    Ok(trace)
}

/// Slice of a set by a tube.
#[derive(Clone, Debug, PartialEq)]
pub enum SliceOutcome {
    Points(PointSet),
    Levels(Vec<(u32, LevelSlice)>),
}

pub fn slice(set: SetRef, t: &Tube) -> Result<SliceOutcome, DimensionError> {
    t.validate()?;
    Ok(match set {
        SetRef::Points(ps) => SliceOutcome::Points(
            ps.points()
                .iter()
                .copied()
                .filter(|&(x, y)| t.contains((x as f64, y as f64)))
                .collect(),
        ),
        SetRef::Chunks(cs) => SliceOutcome::Levels(cs.levels.iter().map(|l| l.m).zip(cs.slices(t)).collect()),
    })
}

/// Smallest box side covering a finite point list, at least 2.
fn extent_side(pts: &[(i64, i64)]) -> u64 {
    let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    ((x1 - x0).max(y1 - y0) as u64 + 1).max(2)
}

fn level_span(cs: &ChunkSet, m: u32) -> LogScalar {
    let l = cs.level(m).expect("level exists");
    let s = match cs.kind {
        SetKind::IntroCone => l.n.clone(),
        _ => ls_mul(&l.k, &l.n),
    };
    if s <= LogScalar::one() {
        LogScalar::from_u64(2)
    } else {
        s
    }
}

/// Per-level slice ratios; the scale is the side of the smallest box
/// covering the level's slice points.
pub fn slice_dim_trace(cs: &ChunkSet, t: &Tube) -> Result<DimensionTrace, DimensionError> {
    let SliceOutcome::Levels(levels) = slice(SetRef::Chunks(cs), t)? else {
        unreachable!()
    };
    let mut trace = DimensionTrace::default();
    for (m, s) in levels {
        let rec = match s {
            LevelSlice::Exact(p) if p.is_empty() => TraceRecord::new(Some(m), level_span(cs, m), Count::zero())?,
            LevelSlice::Exact(p) => TraceRecord::new(
                Some(m),
                LogScalar::from_u64(extent_side(&p)),
                Count::exact(LogScalar::from_u64(p.len() as u64)),
            )?,
            LevelSlice::Interval { lo, hi, side } => {
                let mut r = TraceRecord::new(Some(m), side, Count::between(lo, hi))?;
                r.mode = Mode::Analytic;
                r
            }
        };
        trace.records.push(rec);
    }
    Ok(trace)
}

/// Mass ratios of a tube slice: cumulative slice counts over the closed
/// squares of the set's mass schedule.
pub fn slice_mass_trace(cs: &ChunkSet, t: &Tube) -> Result<DimensionTrace, DimensionError> {
    let SliceOutcome::Levels(levels) = slice(SetRef::Chunks(cs), t)? else {
        unreachable!()
    };
    let scales = mass_scales(cs);
    let mut acc = Count::zero();
    let mut trace = DimensionTrace::default();
    for ((m, s), (_, l)) in levels.into_iter().zip(scales) {
        let part = match s {
            LevelSlice::Exact(p) => {
                let lim = l.to_i64().unwrap_or(i64::MAX);
                let c = p.iter().filter(|q| q.0.abs() <= lim).count();
                Count::exact(LogScalar::from_u64(c as u64))
            }
            LevelSlice::Interval { lo, hi, .. } => Count::between(lo, hi),
        };
        acc = acc.add(&part);
        let mut r = TraceRecord::new(Some(m), two_l(&l), acc.clone())?;
        if !acc.is_exact() || !l.is_exact() {
            r.mode = Mode::Analytic;
        }
        trace.records.push(r);
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimsupEstimate {
    /// Tail maximum of upper ratio endpoints.
    pub estimate: f64,
    /// Tail maximum of lower ratio endpoints.
    pub estimate_lo: f64,
    pub trend: Trend,
    pub error: f64,
}

const TREND_THRESHOLD: f64 = 1e-3;

/// Least-squares slope of `ys` against their index.
fn fit_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

pub fn limsup_estimate(trace: &DimensionTrace, tail: usize) -> Result<LimsupEstimate, DimensionError> {
    if trace.is_empty() || tail == 0 {
        return Err(DimensionError::InvalidParameter(
            "need a non-empty trace and tail >= 1".into(),
        ));
    }
    let recs = &trace.records[trace.len() - tail.min(trace.len())..];
    let hi: Vec<f64> = recs.iter().map(|r| r.ratio_hi.value).collect();
    let estimate = hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let estimate_lo = recs.iter().map(|r| r.ratio_lo.value).fold(f64::NEG_INFINITY, f64::max);
    let error = recs
        .iter()
        .map(|r| r.ratio_hi.error_bound.max(r.ratio_lo.error_bound))
        .fold(0.0, f64::max);
    let slope = fit_slope(&hi);
    let trend = if slope > TREND_THRESHOLD {
        Trend::Increasing
    } else if slope < -TREND_THRESHOLD {
        Trend::Decreasing
    } else {
        Trend::Flat
    };
    Ok(LimsupEstimate {
        estimate,
        estimate_lo,
        trend,
        error,
    })
}

/// The closed-form mass ratio at level `m` of the cone set,
/// `(log w + X + log(1 − e^{−θm/w})) / X` with `X = H_{m−1} + θm/w`.
pub fn paper_mass_ratio(h_prev: &LogScalar, w: u64, theta: f64, m: u32) -> LogRatio {
    let a = theta * m as f64 / w as f64;
    let c = (w as f64).ln() + (-(-a).exp()).ln_1p();
    match h_prev.to_f64() {
        Some(h) => {
            let x = h + a;
            LogRatio {
                value: (c + x) / x,
                error_bound: 4.0 * f64::EPSILON + h_prev.error_bound(),
            }
        }
        None => {
            let rel = match h_prev.depth() {
                1 => (c.abs().ln() - h_prev.r()).exp(),
                _ => 0.0,
            };
            LogRatio {
                value: 1.0,
                error_bound: rel + f64::EPSILON,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_cone_set, build_strip_set, GrowthPolicy};

    fn rec(r: f64) -> TraceRecord {
        TraceRecord::with_ratio(
            None,
            LogScalar::from_u64(10),
            Count::zero(),
            LogRatio {
                value: r,
                error_bound: 0.0,
            },
        )
    }

    #[test]
    fn full_grid_mass() {
        let p: PointSet = (-100..=100).flat_map(|x| (-100..=100).map(move |y| (x, y))).collect();
        let t = mass_dim_trace(SetRef::Points(&p), &[LogScalar::from_u64(100)]).unwrap();
        assert_eq!(t.records[0].count.value().unwrap(), 40401u32.into());
        let want = 40401f64.ln() / 200f64.ln();
        assert!((t.records[0].ratio_hi.value - want).abs() < 1e-12);
    }

    #[test]
    fn segment_and_empty_mass() {
        let seg: PointSet = (0..=100).map(|y| (0, y)).collect();
        let t = mass_dim_trace(SetRef::Points(&seg), &[LogScalar::from_u64(100)]).unwrap();
        assert!((t.records[0].ratio_hi.value - 101f64.ln() / 200f64.ln()).abs() < 1e-12);
        let e = PointSet::empty();
        let t = mass_dim_trace(SetRef::Points(&e), &[1u64.into(), 5u64.into()]).unwrap();
        assert!(t.ratios_hi().iter().all(|&r| r == 0.0));
        assert!(mass_dim_trace(SetRef::Points(&e), &[5u64.into(), 5u64.into()]).is_err());
    }

    #[test]
    fn limsup_examples() {
        let t = DimensionTrace {
            records: [0.5, 0.9, 0.95, 0.99].into_iter().map(rec).collect(),
        };
        let e = limsup_estimate(&t, 2).unwrap();
        assert_eq!(e.estimate, 0.99);
        assert_eq!(e.trend, Trend::Increasing);
        let t = DimensionTrace {
            records: [1.3, 1.3, 1.3].into_iter().map(rec).collect(),
        };
        let e = limsup_estimate(&t, 3).unwrap();
        assert_eq!((e.estimate, e.trend), (1.3, Trend::Flat));
    }

    #[test]
    fn cone_level_one_counting_ratio() {
        let cs = build_cone_set(0.5, 2, 2, 100, 1, GrowthPolicy::Geometric { ratio: 10.0 }).unwrap();
        let t = counting_dim_trace(&cs, &BoxSchedule::DesignatedLevels).unwrap();
        let k = cs.levels[0].k.to_u64().unwrap() as f64;
        let r = t.records[0].ratio_hi.value;
        assert!(r >= 1.0 && r <= 1.0 + 2f64.ln() / (2.0 * k).ln() + 1e-12, "{r}");
    }

    #[test]
    fn strip_tube_slices() {
        let cs = build_strip_set(None, 5, 2, 2, 10, 3, GrowthPolicy::Geometric { ratio: 10.0 }).unwrap();
        let t = slice_dim_trace(&cs, &Tube::vertical(3.0)).unwrap();
        for (r, l) in t.records.iter().zip(&cs.levels) {
            assert_eq!(r.count.lo, l.n);
            assert!((r.ratio_hi.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn paper_ratio_limits() {
        let r = paper_mass_ratio(&LogScalar::from_ln(164.0).unwrap(), 2, 0.5, 3);
        assert!((r.value - 1.0).abs() < 1e-6);
        let small = paper_mass_ratio(&LogScalar::from_u64(162), 2, 0.5, 2);
        let want = (2f64.ln() + 162.5 + (1.0 - (-0.5f64).exp()).ln()) / 162.5;
        assert!((small.value - want).abs() < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let cs = build_cone_set(0.5, 2, 2, 100, 2, GrowthPolicy::Geometric { ratio: 10.0 }).unwrap();
        let t = counting_dim_trace(&cs, &BoxSchedule::DesignatedLevels).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("level,scale_repr,count_lo,count_hi,ratio_lo,ratio_hi,mode")
        );
        assert_eq!(lines.count(), 2);
    }

    mod scaling {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn grid_scaling_keeps_counts(
                pts in proptest::collection::vec((-60i64..60, -60i64..60), 1..50),
                d in 2i64..9,
                x0 in -60i64..60,
            ) {
                let p = PointSet::new(pts);
                let q = p.scaled(d);
                let scales: Vec<LogScalar> = [25u64, 40, 70].into_iter().map(LogScalar::from).collect();
                let big: Vec<LogScalar> = [25u64, 40, 70].into_iter().map(|l| LogScalar::from(l * d as u64)).collect();
                let a = mass_dim_trace(SetRef::Points(&p), &scales).unwrap();
                let b = mass_dim_trace(SetRef::Points(&q), &big).unwrap();
                for (ra, rb) in a.records.iter().zip(&b.records) {
                    prop_assert_eq!(&ra.count, &rb.count);
                    let bound = (d as f64).ln() / ra.scale.ln_f64().unwrap();
                    prop_assert!((ra.ratio_hi.value - rb.ratio_hi.value).abs() <= bound + 1e-12);
                }
                let band = p.points().iter().filter(|pt| pt.0 == x0).count();
                let wide = q.points().iter().filter(|pt| d * x0 <= pt.0 && pt.0 < d * x0 + d).count();
                prop_assert_eq!(band, wide);
            }
        }
    }
}
