use std::path::PathBuf;

use super::HarnessError;
use crate::numfmt::sig12;

const HEADER: &str = "level,scale_repr,count_lo,count_hi,ratio_lo,ratio_hi,mode";

#[derive(Clone, Debug, PartialEq)]
pub struct PlotRecord {
    pub level: Option<u32>,
    /// `ln` of the scale, as text: a number, or an `e^…` form when the
    /// logarithm itself overflows.
    pub log_scale: String,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

/// `ln` of a `scale_repr` value.
fn log_of_repr(s: &str) -> Option<String> {
    let depth = s.matches("e^").count();
    let inner = s.trim_start_matches("e^");
    match depth {
        0 => {
            let v: f64 = inner.parse().ok()?;
            (v > 0.0).then(|| sig12(v.ln()))
        }
        1 => inner.parse::<f64>().ok().map(sig12),
        _ => Some(format!("{}{}", "e^".repeat(depth - 1), inner)),
    }
}

/// Parses one trace CSV as written by the dimension module.
pub fn parse_trace_csv(file: &str, text: &str) -> Result<Vec<PlotRecord>, HarnessError> {
    let err = |line: usize, message: String| HarnessError::Parse {
        file: file.to_string(),
        line,
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        Some(h) => return Err(err(1, format!("unexpected header `{h}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err(no, format!("expected 7 fields, found {}", f.len())));
        }
        let level = match f[0] {
            "" => None,
            s => Some(s.parse().map_err(|_| err(no, format!("bad level `{s}`")))?),
        };
        let log_scale = log_of_repr(f[1]).ok_or_else(|| err(no, format!("bad scale `{}`", f[1])))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(no, format!("bad ratio `{s}`")));
        out.push(PlotRecord {
            level,
            log_scale,
            ratio_lo: num(f[4])?,
            ratio_hi: num(f[5])?,
        });
    }
    Ok(out)
}

/// Merges trace files into `series,level,x,y` with `x = ln(scale)` and
/// `y` the ratio. A file whose ratios are intervals yields `<name>_lo` and
/// `<name>_hi` series.
pub fn emit_plot_data(files: &[PathBuf]) -> Result<String, HarnessError> {
    if files.is_empty() {
        return Err(HarnessError::Config("no trace files given".into()));
    }
    let mut out = String::from("series,level,x,y\n");
    for path in files {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: label.clone(),
            message: e.to_string(),
        })?;
        let recs = parse_trace_csv(&label, &text)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| label.clone());
        let interval = recs.iter().any(|r| r.ratio_lo != r.ratio_hi);
        let series: Vec<(String, bool)> = if interval {
            vec![(format!("{name}_lo"), false), (format!("{name}_hi"), true)]
        } else {
            vec![(name, true)]
        };
        for (s, hi) in series {
            for r in &recs {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    s,
                    r.level.map(|l| l.to_string()).unwrap_or_default(),
                    r.log_scale,
                    sig12(if hi { r.ratio_hi } else { r.ratio_lo })
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn merges_and_splits_intervals() {
        let dir = std::env::temp_dir().join(format!("tubeslice-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let a = write(
            &dir,
            "a.csv",
            &format!("{HEADER}\n1,200,40401,40401,2.0018,2.0018,exact\n"),
        );
        let b = write(&dir, "b.csv", &format!("{HEADER}\n3,e^e^2,1,4,0.1,0.2,analytic\n"));
        let out = emit_plot_data(&[a, b]).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "series,level,x,y");
        assert_eq!(lines[1], "a,1,5.29831736655,2.0018");
        assert_eq!(lines[2], "b_lo,3,e^2,0.1");
        assert_eq!(lines[3], "b_hi,3,e^2,0.2");
        let bad = write(&dir, "c.csv", &format!("{HEADER}\n1,200,1\n"));
        match emit_plot_data(&[bad]) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(emit_plot_data(&[]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
