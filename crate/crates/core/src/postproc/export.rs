//! Legacy-VTK and CSV output of the discrete fields.
//!
//! Every triangle is split into four through its edge midpoints, so the
//! quadratic fields are sampled at all of their nodes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{FieldEvaluator, PostError};
use crate::assembly::Field;
use crate::elements::edge_vertices;
use crate::mesh::Mesh;
use crate::solver::Solution;

pub const ARRAY_NAMES: [&str; 10] = ["sigma_xx", "sigma_xy", "sigma_yy", "s_x", "s_y", "p", "u_x", "u_y", "theta", "velocity_magnitude"];

/// Contents of a legacy-VTK unstructured triangle grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 3]>,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl VtkData {
    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Samples `sol` on the subdivided triangulation of `mesh`: vertices
    /// first, then edge midpoints.
    pub fn from_solution(mesh: &Mesh, sol: &Solution) -> Self {
        let ev = FieldEvaluator::of(mesh, sol);
        let nv = mesh.num_vertices();
        let mut sites: Vec<(usize, [f64; 3])> = vec![(usize::MAX, [0.0; 3]); nv + mesh.num_edges()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                if sites[tri[k]].0 == usize::MAX {
                    let mut l = [0.0; 3];
                    l[k] = 1.0;
                    sites[tri[k]] = (t, l);
                }
                let e = mesh.tri_edges[t][k];
                if sites[nv + e].0 == usize::MAX {
                    let (i, j) = edge_vertices(k);
                    let mut l = [0.0; 3];
                    l[i] = 0.5;
                    l[j] = 0.5;
                    sites[nv + e] = (t, l);
                }
            }
        }
        let points = sites
            .iter()
            .map(|(t, l)| {
                let x = ev.triangle(*t).map(*l);
                [x[0], x[1], 0.0]
            })
            .collect();
        let mut cells = Vec::with_capacity(4 * mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let m = mesh.tri_edges[t].map(|e| nv + e);
            cells.push([tri[0], m[2], m[1]]);
            cells.push([m[2], tri[1], m[0]]);
            cells.push([m[1], m[0], tri[2]]);
            cells.push([m[0], m[1], m[2]]);
        }
        let mut arrays: Vec<(String, Vec<f64>)> = ARRAY_NAMES.iter().map(|n| (n.to_string(), Vec::with_capacity(sites.len()))).collect();
        for (t, l) in &sites {
            let mut k = 0;
            for f in Field::ALL {
                let (v, _) = ev.eval(f, *t, *l);
                for c in 0..f.components() {
                    arrays[k].1.push(v[c]);
                    k += 1;
                }
            }
            arrays[k].1.push(ev.speed(*t, *l));
        }
        Self { points, cells, arrays }
    }

    pub fn to_vtk_string(&self, title: &str) -> String {
        let mut s = String::with_capacity(64 * self.points.len() * (self.arrays.len() + 1));
        writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
        writeln!(s, "POINTS {} double", self.points.len()).unwrap();
        for p in &self.points {
            writeln!(s, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]).unwrap();
        }
        writeln!(s, "CELLS {} {}", self.cells.len(), 4 * self.cells.len()).unwrap();
        for c in &self.cells {
            writeln!(s, "3 {} {} {}", c[0], c[1], c[2]).unwrap();
        }
        writeln!(s, "CELL_TYPES {}", self.cells.len()).unwrap();
        for _ in &self.cells {
            s.push_str("5\n");
        }
        writeln!(s, "POINT_DATA {}", self.points.len()).unwrap();
        for (name, v) in &self.arrays {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for x in v {
                writeln!(s, "{x:.17e}").unwrap();
            }
        }
        s
    }

    /// Node table `x,y,<arrays>`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y");
        for (n, _) in &self.arrays {
            write!(s, ",{n}").unwrap();
        }
        s.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            write!(s, "{:.17e},{:.17e}", p[0], p[1]).unwrap();
            for (_, v) in &self.arrays {
                write!(s, ",{:.17e}", v[i]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PostError {
    PostError::Io { path: path.display().to_string(), source }
}

pub fn write_vtk(path: &Path, data: &VtkData, title: &str) -> Result<(), PostError> {
    std::fs::write(path, data.to_vtk_string(title)).map_err(|e| io_err(path, e))
}

/// Writes `<stem>.vtk` and `<stem>_nodes.csv` into `dir`.
pub fn export_fields(mesh: &Mesh, sol: &Solution, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, PostError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let data = VtkData::from_solution(mesh, sol);
    let vtk = dir.join(format!("{stem}.vtk"));
    write_vtk(&vtk, &data, stem)?;
    let csv = dir.join(format!("{stem}_nodes.csv"));
    std::fs::write(&csv, data.to_csv()).map_err(|e| io_err(&csv, e))?;
    Ok(vec![vtk, csv])
}

/// Reads the subset of legacy VTK written by [`write_vtk`].
pub fn read_vtk(path: &Path) -> Result<VtkData, PostError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let p = path.display().to_string();
    let perr = |line: usize, msg: String| PostError::Parse { path: p.clone(), line, msg };
    let lines: Vec<&str> = text.lines().collect();
    if !lines.first().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(perr(1, "missing vtk header".into()));
    }
    let mut out = VtkData::default();
    let mut i = 4;
    let count = |i: usize, tok: Option<&str>| tok.and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| perr(i + 1, "bad count".into()));
    let num = |i: usize, t: &str| t.parse::<f64>().map_err(|e| perr(i + 1, e.to_string()));
    while i < lines.len() {
        let mut tok = lines[i].split_whitespace();
        match tok.next() {
            Some("POINTS") => {
                let n = count(i, tok.next())?;
                for k in 0..n {
                    let v: Vec<&str> = lines.get(i + 1 + k).ok_or_else(|| perr(i + 1 + k, "truncated".into()))?.split_whitespace().collect();
                    if v.len() != 3 {
                        return Err(perr(i + 2 + k, "expected 3 coordinates".into()));
                    }
                    out.points.push([num(i + 1 + k, v[0])?, num(i + 1 + k, v[1])?, num(i + 1 + k, v[2])?]);
                }
                i += n + 1;
            }
            Some("CELLS") => {
                let n = count(i, tok.next())?;
                for k in 0..n {
                    let v: Vec<usize> = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| perr(i + 1 + k, "truncated".into()))?
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| perr(i + 2 + k, e.to_string()))?;
                    if v.len() != 4 || v[0] != 3 {
                        return Err(perr(i + 2 + k, "expected a triangle cell".into()));
                    }
                    out.cells.push([v[1], v[2], v[3]]);
                }
                i += n + 1;
            }
            Some("CELL_TYPES") => i += count(i, tok.next())? + 1,
            Some("SCALARS") => {
                let name = tok.next().ok_or_else(|| perr(i + 1, "missing array name".into()))?.to_string();
                let n = out.points.len();
                let mut v = Vec::with_capacity(n);
                for k in 0..n {
                    let line = lines.get(i + 2 + k).ok_or_else(|| perr(i + 2 + k, "truncated".into()))?;
                    v.push(num(i + 2 + k, line.trim())?);
                }
                out.arrays.push((name, v));
                i += n + 2;
            }
            _ => i += 1,
        }
    }
    Ok(out)
}
