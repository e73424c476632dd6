use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_atomic, HarnessError};
use crate::constructions::{ChunkSet, SetParams};
use crate::dimension::{
    counting_dim_trace, limsup_estimate, mass_dim_trace, mass_scales, slice_dim_trace, slice_mass_trace, sweep_slices,
    BoxSchedule, DimensionTrace, SetRef, SweepRegion,
};
use crate::geometry::{Box, Tube, TubeParams};
use crate::scalars::LogScalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// `{"u": .., "v": ..}` or `{"x0": ..}` for a vertical band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TubeSpec {
    Params(TubeParams),
    Vertical { x0: f64 },
}

impl TubeSpec {
    pub fn tube(&self) -> Result<Tube, HarnessError> {
        match *self {
            TubeSpec::Params(p) => TubeParams::new(p.u, p.v)
                .map(Tube::sloped)
                .map_err(|e| HarnessError::Config(e.to_string())),
            TubeSpec::Vertical { x0 } => {
                let t = Tube::vertical(x0);
                t.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trace", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSpec {
    /// Centered closed boxes; defaults to the level schedule.
    Mass {
        output: String,
        #[serde(default)]
        scales: Option<Vec<LogScalar>>,
    },
    /// Designated level boxes unless explicit boxes are given.
    Counting {
        output: String,
        #[serde(default)]
        boxes: Option<Vec<Box>>,
    },
    Slice {
        output: String,
        tube: TubeSpec,
    },
    SliceMass {
        output: String,
        tube: TubeSpec,
    },
}

impl TraceSpec {
    fn output(&self) -> &str {
        match self {
            TraceSpec::Mass { output, .. }
            | TraceSpec::Counting { output, .. }
            | TraceSpec::Slice { output, .. }
            | TraceSpec::SliceMass { output, .. } => output,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub output: String,
    pub region: SweepRegion,
    pub grid: (usize, usize),
}

fn default_tail() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default)]
    pub traces: Vec<TraceSpec>,
    #[serde(default)]
    pub sweeps: Vec<SweepSpec>,
    #[serde(default = "default_tail")]
    pub tail: usize,
    #[serde(default)]
    pub format: OutputFormat,
    /// File for the symbolic chunk listing.
    #[serde(default)]
    pub chunks: Option<String>,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment {
            traces: Vec::new(),
            sweeps: Vec::new(),
            tail: default_tail(),
            format: OutputFormat::Csv,
            chunks: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub construction: SetParams,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.construction
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let e = &self.experiment;
        if e.tail == 0 {
            return Err(HarnessError::Config("tail must be >= 1".into()));
        }
        for t in &e.traces {
            if t.output().is_empty() {
                return Err(HarnessError::Config("trace output path is empty".into()));
            }
            if let TraceSpec::Slice { tube, .. } | TraceSpec::SliceMass { tube, .. } = t {
                tube.tube()?;
            }
        }
        for s in &e.sweeps {
            if s.grid.0 < 2 || s.grid.1 < 2 {
                return Err(HarnessError::Config("sweep grid must be at least 2x2".into()));
            }
        }
        Ok(())
    }
}

fn trace_bytes(t: &DimensionTrace, tail: usize, format: OutputFormat) -> Result<Vec<u8>, HarnessError> {
    Ok(match format {
        OutputFormat::Csv => t.to_csv().into_bytes(),
        OutputFormat::Json => {
            let est = if t.is_empty() {
                None
            } else {
                Some(limsup_estimate(t, tail).map_err(|e| HarnessError::stage("estimate", e))?)
            };
            let v = serde_json::json!({ "records": t.records, "limsup": est });
            serde_json::to_vec_pretty(&v).expect("trace serializes")
        }
    })
}

fn with_ext(out: &Path, name: &str, format: OutputFormat) -> PathBuf {
    let p = out.join(name);
    if p.extension().is_some() {
        p
    } else {
        p.with_extension(format.extension())
    }
}

/// Builds the set, runs every configured trace and sweep and writes one
/// file per artifact under `out`. Returns the written paths.
pub fn run_config(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    cfg.validate()?;
    let exp = &cfg.experiment;
    let cs = ChunkSet::build(&cfg.construction).map_err(|e| HarnessError::stage("construction", e))?;
    let mut written = Vec::new();
    if let Some(name) = &exp.chunks {
        let p = out.join(name);
        let body = serde_json::to_vec_pretty(&cs.to_json()).expect("chunk listing serializes");
        write_atomic(&p, &body)?;
        written.push(p);
    }
    for spec in &exp.traces {
        let trace = run_trace(&cs, spec)?;
        let p = with_ext(out, spec.output(), exp.format);
        write_atomic(&p, &trace_bytes(&trace, exp.tail, exp.format)?)?;
        written.push(p);
    }
    for s in &exp.sweeps {
        let table = sweep_slices(&cs, &s.region, s.grid).map_err(|e| HarnessError::stage("sweep", e))?;
        let p = with_ext(out, &s.output, exp.format);
        let body = match exp.format {
            OutputFormat::Csv => table.to_csv().into_bytes(),
            OutputFormat::Json => serde_json::to_vec_pretty(&table).expect("sweep serializes"),
        };
        write_atomic(&p, &body)?;
        written.push(p);
    }
    Ok(written)
}

pub(crate) fn run_trace(cs: &ChunkSet, spec: &TraceSpec) -> Result<DimensionTrace, HarnessError> {
    let stage = |e| HarnessError::stage("trace", e);
    match spec {
        TraceSpec::Mass { scales, .. } => match scales {
            Some(s) => mass_dim_trace(SetRef::Chunks(cs), s).map_err(stage),
            None => {
                let (levels, s): (Vec<u32>, Vec<LogScalar>) = mass_scales(cs).into_iter().unzip();
                let mut t = mass_dim_trace(SetRef::Chunks(cs), &s).map_err(stage)?;
                for (r, m) in t.records.iter_mut().zip(levels) {
                    r.level = Some(m);
                }
                Ok(t)
            }
        },
        TraceSpec::Counting { boxes, .. } => {
            let sched = match boxes {
                Some(b) => BoxSchedule::ExplicitBoxes(b.clone()),
                None => BoxSchedule::DesignatedLevels,
            };
            counting_dim_trace(cs, &sched).map_err(stage)
        }
        TraceSpec::Slice { tube, .. } => slice_dim_trace(cs, &tube.tube()?).map_err(stage),
        TraceSpec::SliceMass { tube, .. } => slice_mass_trace(cs, &tube.tube()?).map_err(stage),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONE: &str = r#"{
        "construction": {"kind": "cone", "theta": 0.5, "w": 2, "n1": 2, "h1": 100, "levels": 3,
                         "growth": {"policy": "geometric", "ratio": 10.0}},
        "experiment": {"traces": [{"trace": "counting", "output": "count"}]}
    }"#;

    #[test]
    fn counting_only_config() {
        let cfg = ExperimentConfig::from_json(CONE).unwrap();
        let dir = std::env::temp_dir().join(format!("tubeslice-cfg-{}", std::process::id()));
        let files = run_config(&cfg, &dir).unwrap();
        assert_eq!(files.len(), 1);
        let a = std::fs::read(&files[0]).unwrap();
        assert_eq!(String::from_utf8_lossy(&a).lines().count(), 4);
        run_config(&cfg, &dir).unwrap();
        assert_eq!(a, std::fs::read(&files[0]).unwrap());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = CONE.replace("\"theta\": 0.5", "\"theta\": -1");
        assert!(matches!(
            ExperimentConfig::from_json(&bad),
            Err(HarnessError::Config(_))
        ));
        let extra = CONE.replace("\"levels\": 3", "\"levels\": 3, \"colour\": 1");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let top = CONE.replacen('{', "{\"oops\": 0, ", 1);
        assert!(ExperimentConfig::from_json(&top).is_err());
    }

    #[test]
    fn tube_spec_forms() {
        let t: TubeSpec = serde_json::from_str(r#"{"u": 2.0, "v": 0.5}"#).unwrap();
        assert!(matches!(t.tube().unwrap(), Tube::Sloped { .. }));
        let t: TubeSpec = serde_json::from_str(r#"{"x0": -1.0}"#).unwrap();
        assert_eq!(t.tube().unwrap(), Tube::vertical(-1.0));
        let t: TubeSpec = serde_json::from_str(r#"{"u": 0.0, "v": 0.5}"#).unwrap();
        assert!(t.tube().is_err());
    }
}
