//! Explicit finite sets of lattice points.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointSetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Sorted, duplicate-free integer points; distinct lattice points are
/// automatically 1-separated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PointSet {
    points: Vec<(i64, i64)>,
}

impl PointSet {
    pub fn new(mut points: Vec<(i64, i64)>) -> Self {
        points.sort_unstable();
        points.dedup();
        PointSet { points }
    }

    pub fn empty() -> Self {
        PointSet::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in lexicographic `(x, y)` order.
    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    /// `(x_min, y_min, x_max, y_max)`.
    pub fn bounding_box(&self) -> Option<(i64, i64, i64, i64)> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        let (ymin, ymax) = self
            .points
            .iter()
            .fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
        Some((first.0, ymin, last.0, ymax))
    }

    /// Points in `[x0, x1) × [y0, y1)`.
    pub fn count_in(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> u64 {
        let a = self.points.partition_point(|p| p.0 < x0);
        let b = self.points.partition_point(|p| p.0 < x1);
        self.points[a..b.max(a)]
            .iter()
            .filter(|p| p.1 >= y0 && p.1 < y1)
            .count() as u64
    }

    /// Points in the closed square `[−l, l]²`.
    pub fn count_centered(&self, l: i64) -> u64 {
        self.count_in(-l, l + 1, -l, l + 1)
    }

    pub fn insert(&mut self, p: (i64, i64)) {
        if let Err(i) = self.points.binary_search(&p) {
            self.points.insert(i, p);
        }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut v = self.points.clone();
        v.extend_from_slice(&other.points);
        PointSet::new(v)
    }

    /// All coordinates multiplied by `d`.
    pub fn scaled(&self, d: i64) -> PointSet {
        PointSet::new(self.points.iter().map(|&(x, y)| (x * d, y * d)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(16 * self.points.len() + 4);
        s.push_str("x,y\n");
        for (x, y) in &self.points {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<PointSet, PointSetError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "x,y" => {}
            _ => {
                return Err(PointSetError::Parse {
                    line: 1,
                    msg: "expected header `x,y`".into(),
                })
            }
        }
        let mut pts = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| PointSetError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (a, b) = line.split_once(',').ok_or_else(|| err("expected two fields"))?;
            let x = a.trim().parse().map_err(|_| err("bad integer"))?;
            let y = b.trim().parse().map_err(|_| err("bad integer"))?;
            pts.push((x, y));
        }
        Ok(PointSet::new(pts))
    }
}

impl FromIterator<(i64, i64)> for PointSet {
    fn from_iter<I: IntoIterator<Item = (i64, i64)>>(it: I) -> Self {
        PointSet::new(it.into_iter().collect())
    }
}
