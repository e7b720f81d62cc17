//! Field profiles along axis-aligned lines.

use std::fmt::Write as _;

use super::FieldEvaluator;
use crate::assembly::Field;
use crate::mesh::{Mesh, PointLocator};
use crate::solver::Solution;

/// Axis-aligned segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceLine {
    /// `y = at`, `x` from `from` to `to`.
    Horizontal { at: f64, from: f64, to: f64 },
    /// `x = at`, `y` from `from` to `to`.
    Vertical { at: f64, from: f64, to: f64 },
}

impl SliceLine {
    fn point(&self, s: f64) -> [f64; 2] {
        match *self {
            SliceLine::Horizontal { at, from, to } => [from + s * (to - from), at],
            SliceLine::Vertical { at, from, to } => [at, from + s * (to - from)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    pub x: [f64; 2],
    /// Field values in [`Field::ALL`] order; `None` when the point lies
    /// outside the mesh (e.g. inside an obstacle).
    pub values: Option<[[f64; 3]; 5]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceProfile {
    pub line: SliceLine,
    pub samples: Vec<SliceSample>,
}

impl SliceProfile {
    pub fn skipped(&self) -> impl Iterator<Item = &SliceSample> {
        self.samples.iter().filter(|s| s.values.is_none())
    }

    /// Component `comp` of `f` at every sample, `None` where skipped.
    pub fn series(&self, f: Field, comp: usize) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.values.map(|v| v[f.index()][comp])).collect()
    }

    /// CSV with columns `x,y,inside,sigma_xx,...,theta`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,inside,sigma_xx,sigma_xy,sigma_yy,s_x,s_y,p,u_x,u_y,theta\n");
        for p in &self.samples {
            write!(s, "{:.17e},{:.17e},{}", p.x[0], p.x[1], u8::from(p.values.is_some())).unwrap();
            match p.values {
                Some(v) => {
                    for f in Field::ALL {
                        for c in 0..f.components() {
                            write!(s, ",{:.17e}", v[f.index()][c]).unwrap();
                        }
                    }
                }
                None => s.push_str(",,,,,,,,,"),
            }
            s.push('\n');
        }
        s
    }
}

/// `count ≥ 2` equally spaced samples including both endpoints.
pub fn sample_slice(mesh: &Mesh, sol: &Solution, line: SliceLine, count: usize) -> SliceProfile {
    let ev = FieldEvaluator::of(mesh, sol);
    let loc = PointLocator::new(mesh);
    let samples = (0..count)
        .map(|i| {
            let s = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let x = line.point(s);
            let values = loc.locate(x).map(|(t, l)| ev.eval_all(t, l).map(|fp| fp.0));
            SliceSample { x, values }
        })
        .collect();
    SliceProfile { line, samples }
}
