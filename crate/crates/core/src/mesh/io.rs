//! ASCII interchange: header `mesh2d 1`, a counts line `V T B`, then vertex
//! lines `x y`, triangle lines `i j k` and boundary lines `i j label`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, MeshError};

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let labeled: Vec<_> = mesh.boundary.iter().filter_map(|b| b.label.map(|l| (mesh.edges[b.edge].v, l))).collect();
    let mut s = String::new();
    writeln!(s, "mesh2d 1").unwrap();
    writeln!(s, "{} {} {}", mesh.vertices.len(), mesh.triangles.len(), labeled.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:e} {:e}", v[0], v[1]).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for (v, l) in labeled {
        writeln!(s, "{} {} {}", v[0], v[1], l).unwrap();
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })
}

pub fn read_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
    read_mesh_str(&text)
}

pub fn read_mesh_str(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| MeshError::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") })
    };
    let (ln, header) = next("header")?;
    if header.trim() != "mesh2d 1" {
        return Err(MeshError::Parse { line: ln + 1, msg: format!("expected `mesh2d 1`, found `{}`", header.trim()) });
    }
    let (ln, counts) = next("counts")?;
    let c: Vec<usize> = parse_fields(counts, ln, 3)?;
    let mut vertices = Vec::with_capacity(c[0]);
    for _ in 0..c[0] {
        let (ln, l) = next("vertex")?;
        let v: Vec<f64> = parse_fields(l, ln, 2)?;
        vertices.push([v[0], v[1]]);
    }
    let mut triangles = Vec::with_capacity(c[1]);
    for _ in 0..c[1] {
        let (ln, l) = next("triangle")?;
        let t: Vec<usize> = parse_fields(l, ln, 3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    let mut labels = HashMap::new();
    for _ in 0..c[2] {
        let (ln, l) = next("boundary edge")?;
        let b: Vec<usize> = parse_fields(l, ln, 3)?;
        labels.insert([b[0].min(b[1]), b[0].max(b[1])], b[2] as u32);
    }
    Mesh::from_parts(vertices, triangles, &labels)
}

fn parse_fields<T: std::str::FromStr>(line: &str, ln: usize, n: usize) -> Result<Vec<T>, MeshError> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != n {
        return Err(MeshError::Parse { line: ln + 1, msg: format!("expected {n} fields, found {}", f.len()) });
    }
    f.iter()
        .map(|s| s.parse::<T>().map_err(|_| MeshError::Parse { line: ln + 1, msg: format!("cannot parse `{s}`") }))
        .collect()
}
