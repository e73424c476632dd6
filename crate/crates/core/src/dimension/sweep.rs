//! Grid sweeps of tube slices over a parameter rectangle.

use serde::{Deserialize, Serialize};

use super::trace::{limsup_estimate, slice_dim_trace};
use super::DimensionError;
use crate::constructions::ChunkSet;
use crate::geometry::{line_to_tube, LineParams, Tube, TubeParams};
use crate::numfmt::sig12;
use crate::scalars::{ls_sub, LogScalar};

/// How a grid node `(a, b)` is turned into a tube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// `(u, v)` tube parameters; `u = 0` is the vertical band `[v − 1, v)`.
    Tube,
    /// Right edge on the line `y = ũ(x − ṽ)`.
    Slope,
    /// Right edge through `(ṽ, 0)` at angle `(θ/2)·ũ/β` from the axis,
    /// `β = cot(θ/2)`.
    ConeAngle,
}

impl ParamKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParamKind::Tube => "tube",
            ParamKind::Slope => "slope",
            ParamKind::ConeAngle => "cone_angle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRegion {
    pub kind: ParamKind,
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl SweepRegion {
    /// Tube at a node, or `None` where the parametrization degenerates.
    pub fn tube_at(&self, a: f64, b: f64, theta: Option<f64>) -> Option<Tube> {
        match self.kind {
            ParamKind::Tube if a == 0.0 => Some(Tube::vertical(b - 1.0)),
            ParamKind::Tube => TubeParams::new(a, b).ok().map(Tube::sloped),
            ParamKind::Slope => line_to_tube(&LineParams::with_x_intercept(a, b)).ok().map(Tube::sloped),
            ParamKind::ConeAngle => {
                let half = theta? / 2.0;
                let beta = 1.0 / half.tan();
                Some(Tube::right_edge_through(half * a / beta, b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub u: f64,
    pub v: f64,
    pub kind: ParamKind,
    pub level_lo: Vec<LogScalar>,
    pub level_hi: Vec<LogScalar>,
    /// Tail maximum of the slice ratio trace.
    pub ratio_tail: f64,
    pub verdict: bool,
    /// Smallest lower bound over the checked levels.
    pub min_level_count: Option<LogScalar>,
    pub levels_checked: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub region: SweepRegion,
    pub grid: (usize, usize),
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn true_count(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict).count()
    }

    /// `u,v,param_kind,verdict,min_level_count,levels_checked`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,v,param_kind,verdict,min_level_count,levels_checked\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                sig12(r.u),
                sig12(r.v),
                r.kind.as_str(),
                r.verdict,
                r.min_level_count.as_ref().map(|c| c.repr()).unwrap_or_default(),
                r.levels_checked
            ));
        }
        s
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

const RATIO_TAIL: usize = 3;

fn evaluate(cs: &ChunkSet, region: &SweepRegion, a: f64, b: f64) -> Result<SweepRow, DimensionError> {
    let mut row = SweepRow {
        u: a,
        v: b,
        kind: region.kind,
        level_lo: Vec::new(),
        level_hi: Vec::new(),
        ratio_tail: 0.0,
        verdict: false,
        min_level_count: None,
        levels_checked: 0,
    };
    let Some(tube) = region.tube_at(a, b, cs.params.theta()) else {
        return Ok(row);
    };
    let trace = slice_dim_trace(cs, &tube)?;
    row.ratio_tail = limsup_estimate(&trace, RATIO_TAIL)?.estimate;
    let mut met = false;
    let mut ok = true;
    for (rec, level) in trace.records.iter().zip(&cs.levels) {
        row.level_lo.push(rec.count.lo.clone());
        row.level_hi.push(rec.count.hi.clone());
        if !met {
            if rec.count.hi.is_zero() {
                continue;
            }
            met = true;
            row.levels_checked = 1;
            continue;
        }
        row.levels_checked += 1;
        let need = ls_sub(&level.n, &LogScalar::one())?;
        if rec.count.lo < need {
            ok = false;
        }
        if row.min_level_count.as_ref().is_none_or(|m| rec.count.lo < *m) {
            row.min_level_count = Some(rec.count.lo.clone());
        }
    }
    row.verdict = met && ok;
    Ok(row)
}

/// Slices at every node of an `nu × nv` grid covering `region` with its
/// corners; nodes are evaluated on scoped worker threads.
pub fn sweep_slices(cs: &ChunkSet, region: &SweepRegion, grid: (usize, usize)) -> Result<SweepTable, DimensionError> {
    let (nu, nv) = grid;
    if nu < 2 || nv < 2 {
        return Err(DimensionError::InvalidParameter("grid must be at least 2x2".into()));
    }
    if !(region.u.0 < region.u.1 && region.v.0 < region.v.1) {
        return Err(DimensionError::InvalidParameter("empty sweep rectangle".into()));
    }
    let nodes: Vec<(f64, f64)> = linspace(region.u.0, region.u.1, nu)
        .into_iter()
        .flat_map(|a| linspace(region.v.0, region.v.1, nv).into_iter().map(move |b| (a, b)))
        .collect();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(nodes.len());
    let per = nodes.len().div_ceil(workers);
    let parts: Vec<Result<Vec<SweepRow>, DimensionError>> = std::thread::scope(|s| {
        let handles: Vec<_> = nodes
            .chunks(per)
            .map(|part| s.spawn(move || part.iter().map(|&(a, b)| evaluate(cs, region, a, b)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker")).collect()
    });
    let mut rows = Vec::with_capacity(nodes.len());
    for p in parts {
        rows.extend(p?);
    }
    Ok(SweepTable {
        region: *region,
        grid,
        rows,
    })
}

fn fraction(table: &SweepTable, pred: impl Fn(&SweepRow) -> bool) -> f64 {
    if table.rows.is_empty() {
        return 0.0;
    }
    table.rows.iter().filter(|r| pred(r)).count() as f64 / table.rows.len() as f64
}

/// Fraction of true verdicts; the table must cover `[−M, M]²`.
pub fn good_parameter_density(table: &SweepTable, m: f64) -> Result<f64, DimensionError> {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + m.abs());
    let r = &table.region;
    if !(m > 0.0 && close(r.u.0, -m) && close(r.u.1, m) && close(r.v.0, -m) && close(r.v.1, m)) {
        return Err(DimensionError::InvalidParameter(format!(
            "sweep region {:?} x {:?} is not [-{m}, {m}]^2",
            r.u, r.v
        )));
    }
    Ok(fraction(table, |row| row.verdict))
}

/// Fraction of nodes with `|ũ| > beta`, on the table's own grid.
pub fn slope_region_density(table: &SweepTable, beta: f64) -> f64 {
    fraction(table, |row| row.u.abs() > beta)
}

/// Fraction of nodes in the region printed as
/// `((c, ∞) × (−∞, ε)) ∪ ((−∞, −c) ∪ (ε, ∞))`, reading the inner `∪` of the
/// second operand as a product.
pub fn literal_region_density(table: &SweepTable, c: f64, eps: f64) -> f64 {
    fraction(table, |row| (row.u > c && row.v < eps) || (row.u < -c && row.v > eps))
}
