//! Fixed desk-scale scenarios. Parameters live in `fixtures/*.json`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use super::{Check, HarnessError, VerifyReport};
use crate::constructions::{ChunkSet, SetParams};
use crate::dimension::{
    counting_dim_trace, good_parameter_density, limsup_estimate, literal_region_density, mass_dim_trace, mass_scales,
    paper_mass_ratio, slice_dim_trace, slice_mass_trace, slope_region_density, sweep_slices, BoxSchedule,
    DimensionTrace, ParamKind, SetRef, SweepRegion, Trend,
};
use crate::geometry::{Tube, TubeParams};
use crate::scalars::LogScalar;

pub const SUITES: [&str; 6] = ["intro", "strip", "cone", "fattened", "density", "marstrand_mass"];

const TOL: f64 = 1e-12;

type Res<T> = Result<T, HarnessError>;

fn fixture<T: DeserializeOwned>(name: &str, text: &str) -> Res<T> {
    serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("fixture {name}: {e}")))
}

fn build(p: &SetParams) -> Res<ChunkSet> {
    ChunkSet::build(p).map_err(|e| HarnessError::stage("construction", e))
}

fn dim<T>(r: Result<T, crate::dimension::DimensionError>) -> Res<T> {
    r.map_err(|e| HarnessError::stage("estimate", e))
}

fn check(id: &str, citation: &str, measured: serde_json::Value, tolerance: impl Into<String>, pass: bool) -> Check {
    Check {
        id: id.to_string(),
        citation: citation.to_string(),
        measured,
        tolerance: tolerance.into(),
        pass,
    }
}

fn strictly(v: &[f64], up: bool) -> bool {
    v.windows(2).all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
}

fn trend_name(t: Trend) -> &'static str {
    match t {
        Trend::Increasing => "increasing",
        Trend::Decreasing => "decreasing",
        Trend::Flat => "flat",
    }
}

fn mass_trace(cs: &ChunkSet) -> Res<DimensionTrace> {
    let scales: Vec<LogScalar> = mass_scales(cs).into_iter().map(|(_, l)| l).collect();
    dim(mass_dim_trace(SetRef::Chunks(cs), &scales))
}

/// Runs the named scenario. `seed` drives the randomized tube draws.
pub fn verify_suite(name: &str, seed: u64) -> Res<VerifyReport> {
    let checks = match name {
        "intro" => intro()?,
        "strip" => strip()?,
        "cone" => cone(seed)?,
        "fattened" => fattened()?,
        "density" => density()?,
        "marstrand_mass" => marstrand_mass(seed)?,
        other => return Err(HarnessError::UnknownSuite(other.to_string())),
    };
    Ok(VerifyReport::new(name, checks))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntroFixture {
    set: SetParams,
    tube_angles: Vec<f64>,
    tail: usize,
    mass_range: (f64, f64),
    count_min: f64,
    tube_min: f64,
}

fn intro() -> Res<Vec<Check>> {
    let f: IntroFixture = fixture("intro", include_str!("../../fixtures/intro.json"))?;
    let cs = build(&f.set)?;
    let mass = mass_trace(&cs)?.ratios_hi();
    let last = *mass.last().expect("levels");
    let count = dim(counting_dim_trace(&cs, &BoxSchedule::DesignatedLevels))?;
    let c_last = count.records.last().expect("levels").ratio_lo.value;
    let mut tube_est = Vec::new();
    for &phi in &f.tube_angles {
        let t = dim(slice_dim_trace(&cs, &Tube::at_angle(phi)))?;
        tube_est.push(dim(limsup_estimate(&t, f.tail))?.estimate);
    }
    let tube_min = tube_est.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(vec![
        check(
            "mass-ratio",
            "intro cone: mass dimension 3/2",
            json!({ "ratios": mass, "last": last }),
            format!("last in [{}, {}], strictly increasing", f.mass_range.0, f.mass_range.1),
            last >= f.mass_range.0 && last <= f.mass_range.1 && strictly(&mass, true),
        ),
        check(
            "counting-ratio",
            "intro cone: counting dimension 2",
            json!({ "ratios": count.ratios_lo(), "last": c_last }),
            format!(">= {}", f.count_min),
            c_last >= f.count_min,
        ),
        check(
            "tube-counting-ratio",
            "intro cone: tubes of counting dimension 1",
            json!({ "tail_estimates": tube_est }),
            format!(">= {}", f.tube_min),
            tube_min >= f.tube_min,
        ),
    ])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StripFixture {
    set: SetParams,
    analytic_set: SetParams,
    tube_x0: Vec<f64>,
    tail: usize,
    count_min: f64,
    mass_max: f64,
    analytic_mass_max: f64,
}

fn strip() -> Res<Vec<Check>> {
    let f: StripFixture = fixture("strip", include_str!("../../fixtures/strip.json"))?;
    let cs = build(&f.set)?;
    let count = dim(counting_dim_trace(&cs, &BoxSchedule::DesignatedLevels))?;
    let ce = dim(limsup_estimate(&count, f.tail))?;
    let mut tubes = Vec::new();
    let mut tubes_ok = true;
    for &x0 in &f.tube_x0 {
        let t = dim(slice_dim_trace(&cs, &Tube::vertical(x0)))?;
        let e = dim(limsup_estimate(&t, f.tail))?;
        tubes_ok &= e.trend == Trend::Increasing && e.estimate >= f.count_min;
        tubes.push(json!({ "x0": x0, "estimate": e.estimate, "trend": trend_name(e.trend) }));
    }
    let mass = mass_trace(&cs)?;
    let me = dim(limsup_estimate(&mass, f.tail))?;
    let m_last = mass.records.last().expect("levels").ratio_hi.value;

    let acs = build(&f.analytic_set)?;
    let amass = mass_trace(&acs)?;
    let a_last = amass.records.last().expect("levels").ratio_hi.value;
    let (k, n1) = match f.analytic_set {
        SetParams::Strip { k, n1, .. } => (k as f64, n1 as f64),
        _ => {
            return Err(HarnessError::Config(
                "fixture strip: analytic_set must be a strip".into(),
            ))
        }
    };
    let m = acs.levels.len() as f64;
    let l_last = mass_scales(&acs).pop().expect("levels").1;
    let den = l_last.ln_f64().unwrap_or(f64::INFINITY) + std::f64::consts::LN_2;
    let formula = (k * m * (n1 + (m + 1.0) / 2.0)).ln() / den;
    Ok(vec![
        check(
            "set-counting-trend",
            "strip set: counting dimension 1",
            json!({ "ratios": count.ratios_hi(), "estimate": ce.estimate, "trend": trend_name(ce.trend) }),
            format!("trend increasing, tail estimate >= {}", f.count_min),
            ce.trend == Trend::Increasing && ce.estimate >= f.count_min,
        ),
        check(
            "tube-counting-trend",
            "strip set: every tube in the window has counting dimension 1",
            json!(tubes),
            format!("trend increasing, tail estimate >= {}", f.count_min),
            tubes_ok,
        ),
        check(
            "mass-ratio",
            "strip set: mass dimension 0",
            json!({ "ratios": mass.ratios_hi(), "estimate": me.estimate, "last": m_last, "trend": trend_name(me.trend) }),
            format!("trend decreasing, tail estimate <= {}", f.mass_max),
            me.trend == Trend::Decreasing && me.estimate <= f.mass_max,
        ),
        check(
            "analytic-mass-ratio",
            "strip set: mass dimension 0",
            json!({ "last": a_last, "closed_form": formula }),
            format!("<= {:e}", f.analytic_mass_max),
            a_last <= f.analytic_mass_max && formula <= f.analytic_mass_max,
        ),
    ])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeFixture {
    set: SetParams,
    analytic_set: SetParams,
    tubes: usize,
    angle_margin: f64,
    mass_tubes: usize,
    tail: usize,
    final_tol: f64,
    analytic_count_tol: f64,
    slice_min: f64,
    mass_tol: f64,
    tube_mass_max: f64,
}

/// Direction angles uniform in `(−θ/2 + margin, θ/2 − margin)`.
pub(crate) fn random_angles(theta: f64, margin: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = theta / 2.0 - margin;
    (0..count).map(|_| rng.random_range(-a..a)).collect()
}

fn cone(seed: u64) -> Res<Vec<Check>> {
    let f: ConeFixture = fixture("cone", include_str!("../../fixtures/cone.json"))?;
    let theta = f.set.theta().expect("cone fixture");
    let cs = build(&f.set)?;
    let w = match f.set {
        SetParams::Cone { w, .. } => w as f64,
        _ => return Err(HarnessError::Config("fixture cone: set must be a cone".into())),
    };

    let count = dim(counting_dim_trace(&cs, &BoxSchedule::DesignatedLevels))?;
    let ratios = count.ratios_hi();
    let in_band = count.records.iter().all(|r| {
        let side = r.scale.ln_f64().expect("finite scale");
        r.ratio_lo.value >= 1.0 - TOL && r.ratio_hi.value <= 1.0 + w.ln() / side + TOL
    });
    let last = *ratios.last().expect("levels");

    let acs = build(&f.analytic_set)?;
    let acount = dim(counting_dim_trace(&acs, &BoxSchedule::DesignatedLevels))?;
    let arec = acount.records.last().expect("levels");
    let adev = (arec.ratio_hi.value - 1.0).abs().max((1.0 - arec.ratio_lo.value).abs());

    let angles = random_angles(theta, f.angle_margin, f.tubes, seed);
    let mut violations = Vec::new();
    let mut total_violations = 0usize;
    let mut low_estimates = 0usize;
    let mut min_est = f64::INFINITY;
    for &phi in &angles {
        let t = dim(slice_dim_trace(&cs, &Tube::at_angle(phi)))?;
        for (r, l) in t.records.iter().zip(&cs.levels) {
            let n = l.n_u64().expect("exact level");
            let lo = r.count.lo.to_u64().unwrap_or(0);
            let hi = r.count.hi.to_u64().unwrap_or(u64::MAX);
            if lo + 1 < n || hi > 2 * n + 2 {
                total_violations += 1;
                if violations.len() < 20 {
                    violations.push(json!({ "phi": phi, "level": l.m, "count": lo, "n": n }));
                }
            }
        }
        let e = dim(limsup_estimate(&t, f.tail))?.estimate;
        min_est = min_est.min(e);
        if e < f.slice_min {
            low_estimates += 1;
        }
    }
    let h_prev = &acs.levels[acs.levels.len() - 2].big_h;
    let m = acs.levels.len() as u32;
    let formula = paper_mass_ratio(h_prev, w as u64, theta, m);
    let amass = mass_trace(&acs)?;
    let amass_last = amass.records.last().expect("levels");
    let mass_dev = (amass_last.ratio_hi.value - 1.0)
        .abs()
        .max((1.0 - amass_last.ratio_lo.value).abs());

    let mut tube_mass = Vec::new();
    for &phi in angles.iter().take(f.mass_tubes) {
        let t = dim(slice_mass_trace(&acs, &Tube::at_angle(phi)))?;
        tube_mass.push(t.records.last().expect("levels").ratio_hi.value);
    }
    let tube_mass_max = tube_mass.iter().cloned().fold(0.0, f64::max);

    Ok(vec![
        check(
            "set-counting-ratio",
            "cone set: counting dimension 1",
            json!({ "ratios": ratios, "last": last }),
            format!(
                "in [1, 1 + log w / log(K n)], strictly decreasing, last within {} of 1",
                f.final_tol
            ),
            in_band && strictly(&ratios, false) && (last - 1.0).abs() <= f.final_tol,
        ),
        check(
            "analytic-counting-ratio",
            "cone set: counting dimension 1",
            json!({ "ratio_lo": arec.ratio_lo.value, "ratio_hi": arec.ratio_hi.value }),
            format!("within {:e} of 1 at level {}", f.analytic_count_tol, acs.levels.len()),
            adev <= f.analytic_count_tol,
        ),
        check(
            "tube-slice-counts",
            "cone set: every tube in the cone holds between n_m and 2n_m points per level",
            json!({ "tubes": angles.len(), "violations": total_violations, "examples": violations }),
            "count in [n_m - 1, 2 n_m + 2] at every level, no violations",
            total_violations == 0,
        ),
        check(
            "tube-slice-ratio",
            "cone set: tubes in the cone have counting dimension 1",
            json!({ "min_estimate": min_est, "below": low_estimates }),
            format!("tail estimate >= {} for every tube", f.slice_min),
            low_estimates == 0,
        ),
        check(
            "closed-form-mass-ratio",
            "cone set: mass dimension 1",
            json!({ "value": formula.value, "error_bound": formula.error_bound, "measured": [amass_last.ratio_lo.value, amass_last.ratio_hi.value] }),
            format!("within {:e} of 1", f.mass_tol),
            (formula.value - 1.0).abs() <= f.mass_tol && mass_dev <= f.mass_tol,
        ),
        check(
            "tube-mass-ratio",
            "cone set: tubes have mass dimension 0",
            json!({ "max": tube_mass_max }),
            format!("<= {} at level {}", f.tube_mass_max, acs.levels.len()),
            tube_mass_max <= f.tube_mass_max,
        ),
    ])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FattenedFixture {
    set: SetParams,
    grid: (usize, usize),
    margin: f64,
}

fn fattened() -> Res<Vec<Check>> {
    let f: FattenedFixture = fixture("fattened", include_str!("../../fixtures/fattened.json"))?;
    let (theta, eps) = match f.set {
        SetParams::FattenedCone { theta, eps, .. } => (theta, eps),
        _ => {
            return Err(HarnessError::Config(
                "fixture fattened: set must be a fattened cone".into(),
            ))
        }
    };
    let cs = build(&f.set)?;
    let beta = 1.0 / (theta / 2.0).tan();
    let region = SweepRegion {
        kind: ParamKind::ConeAngle,
        u: (-beta + f.margin, beta - f.margin),
        v: (-eps + f.margin, eps - f.margin),
    };
    let table = dim(sweep_slices(&cs, &region, f.grid))?;
    let failing: Vec<_> = table
        .rows
        .iter()
        .filter(|r| !r.verdict)
        .take(10)
        .map(|r| json!([r.u, r.v]))
        .collect();
    let total = f.grid.0 * f.grid.1;
    Ok(vec![check(
        "sweep-verdicts",
        "fattened cone: every tube near the axis has counting dimension 1",
        json!({ "true": table.true_count(), "nodes": total, "failing": failing }),
        format!("{total}/{total}"),
        table.true_count() == total,
    )])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFixture {
    set: SetParams,
    grid: (usize, usize),
    m: f64,
    min_density: f64,
    cells: usize,
}

fn density() -> Res<Vec<Check>> {
    let f: DensityFixture = fixture("density", include_str!("../../fixtures/density.json"))?;
    let (theta, eps) = match f.set {
        SetParams::FattenedCone { theta, eps, .. } => (theta, eps),
        _ => {
            return Err(HarnessError::Config(
                "fixture density: set must be a fattened cone".into(),
            ))
        }
    };
    let cs = build(&f.set)?;
    let region = SweepRegion {
        kind: ParamKind::Slope,
        u: (-f.m, f.m),
        v: (-f.m, f.m),
    };
    let table = dim(sweep_slices(&cs, &region, f.grid))?;
    let d = dim(good_parameter_density(&table, f.m))?;
    let beta = 1.0 / (theta / 2.0).tan();
    let analytic = slope_region_density(&table, beta);
    let literal = literal_region_density(&table, 1.0 / theta.tan(), eps);
    let tol = f.cells as f64 / table.rows.len() as f64;
    Ok(vec![
        check(
            "good-parameter-density",
            "fattened cone: positive density of tubes with counting dimension 1",
            json!({ "density": d }),
            format!("> {}", f.min_density),
            d > f.min_density,
        ),
        check(
            "region-agreement",
            "fattened cone: tubes steeper than the cone edges",
            json!({ "density": d, "region": analytic, "difference": (d - analytic).abs() }),
            format!("within {} grid cells", f.cells),
            (d - analytic).abs() <= tol + TOL,
        ),
        check(
            "printed-region",
            "fattened cone: region as printed (informational)",
            json!({ "region": literal }),
            "informational",
            true,
        ),
    ])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarstrandFixture {
    set: SetParams,
    tubes: usize,
    log10_u: (f64, f64),
    slack: f64,
}

fn marstrand_mass(seed: u64) -> Res<Vec<Check>> {
    let f: MarstrandFixture = fixture("marstrand_mass", include_str!("../../fixtures/marstrand_mass.json"))?;
    let cs = build(&f.set)?;
    let set_est = mass_trace(&cs)?.records.last().expect("levels").ratio_hi.value;
    let bound = (set_est - 1.0).max(0.0) + f.slack;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..f.tubes {
        let u = 10f64.powf(rng.random_range(f.log10_u.0..f.log10_u.1));
        let t = Tube::sloped(TubeParams::new(u, 0.0).map_err(|e| HarnessError::stage("tube", e))?);
        let tr = dim(slice_mass_trace(&cs, &t))?;
        worst = worst.max(tr.records.last().expect("levels").ratio_hi.value);
    }
    Ok(vec![check(
        "tube-mass-bound",
        "almost every slice has mass dimension at most max(0, D - 1)",
        json!({ "set_estimate": set_est, "worst_tube": worst, "bound": bound }),
        format!("<= max(0, set - 1) + {}", f.slack),
        worst <= bound,
    )])
}
