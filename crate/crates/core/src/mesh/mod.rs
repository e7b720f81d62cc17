//! Conforming 2D triangulations with labeled boundary edges.

mod generators;
mod io;
mod locate;

use std::collections::HashMap;

use thiserror::Error;

pub use generators::{build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh, build_unit_square_mesh_with, SquareSplit};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use locate::PointLocator;

/// Bottom wall of the unit square.
pub const GAMMA1: u32 = 1;
/// Remaining walls of the unit square.
pub const GAMMA2: u32 = 2;
pub const INNER: u32 = 1;
pub const OUTER: u32 = 2;

/// Largest aspect ratio `R / 2r` accepted from the generators.
pub const QUALITY_BOUND: f64 = 3.0;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh parameters: {0}")]
    Parameters(String),
    #[error("triangle {tri} references missing vertex {vertex}")]
    VertexIndex { tri: usize, vertex: usize },
    #[error("generator produced aspect ratio {0:.3} above the quality bound {QUALITY_BOUND}")]
    Quality(f64),
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Vertex indices, smaller first.
    pub v: [usize; 2],
    /// Adjacent triangles; one entry for boundary edges.
    pub tris: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub label: Option<u32>,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Unit tangent, the normal rotated counterclockwise by 90°.
    pub tangent: [f64; 2],
    pub tri: usize,
    /// Local edge index (opposite local vertex) in `tri`.
    pub local: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Global edge index of local edge `k` (opposite local vertex `k`).
    pub tri_edges: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    pub h_max: f64,
}

impl Mesh {
    /// Builds connectivity and boundary frames. Boundary edges absent from
    /// `labels` (keyed by sorted vertex pair) are left unlabeled.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        labels: &HashMap<[usize; 2], u32>,
    ) -> Result<Self, MeshError> {
        let mut index: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut h_max: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::VertexIndex { tri: t, vertex: v });
                }
            }
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge { v: key, tris: Vec::with_capacity(2) });
                    edges.len() - 1
                });
                edges[e].tris.push(t);
                te[k] = e;
                h_max = h_max.max(dist(vertices[a], vertices[b]));
            }
            tri_edges.push(te);
        }
        let mut boundary = Vec::new();
        for (e, edge) in edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let t = edge.tris[0];
            let local = (0..3).find(|&k| tri_edges[t][k] == e).expect("edge belongs to its triangle");
            let (a, b) = (vertices[edge.v[0]], vertices[edge.v[1]]);
            let len = dist(a, b);
            let tv = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            let mut n = [tv[1], -tv[0]];
            let c = centroid(&vertices, &triangles[t]);
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            if n[0] * (c[0] - m[0]) + n[1] * (c[1] - m[1]) > 0.0 {
                n = [-n[0], -n[1]];
            }
            boundary.push(BoundaryEdge {
                edge: e,
                label: labels.get(&edge.v).copied(),
                normal: n,
                tangent: [-n[1], n[0]],
                tri: t,
                local,
                length: len,
            });
        }
        Ok(Self { vertices, triangles, edges, tri_edges, boundary, h_max })
    }

    /// Builds a mesh whose boundary edges are labeled by `label(a, b)` from
    /// their endpoint coordinates.
    pub fn from_triangles(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        label: impl Fn([f64; 2], [f64; 2]) -> u32,
    ) -> Result<Self, MeshError> {
        let mut mesh = Self::from_parts(vertices, triangles, &HashMap::new())?;
        for b in mesh.boundary.iter_mut() {
            let [i, j] = mesh.edges[b.edge].v;
            b.label = Some(label(mesh.vertices[i], mesh.vertices[j]));
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Boundary edges carrying `label`.
    pub fn boundary_with_label(&self, label: u32) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |b| b.label == Some(label))
    }

    /// Distinct labels present on the boundary, sorted.
    pub fn labels(&self) -> Vec<u32> {
        let mut l: Vec<u32> = self.boundary.iter().filter_map(|b| b.label).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Applies `f` to every vertex, keeping the connectivity and labels.
    pub fn transformed(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self, MeshError> {
        let labels: HashMap<[usize; 2], u32> =
            self.boundary.iter().filter_map(|b| b.label.map(|l| (self.edges[b.edge].v, l))).collect();
        Self::from_parts(self.vertices.iter().map(|v| f(*v)).collect(), self.triangles.clone(), &labels)
    }

    /// Translates and rotates the domain.
    pub fn rigidly_moved(&self, shift: [f64; 2], angle: f64) -> Result<Self, MeshError> {
        let (s, c) = angle.sin_cos();
        self.transformed(|v| [c * v[0] - s * v[1] + shift[0], s * v[0] + c * v[1] + shift[1]])
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn centroid(v: &[[f64; 2]], t: &[usize; 3]) -> [f64; 2] {
    [(v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0, (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0]
}

/// Shape measures of one triangle: `(min angle in degrees, R / 2r)`.
pub fn triangle_quality(p: [[f64; 2]; 3]) -> (f64, f64) {
    let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    if area == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let mut min_angle = f64::INFINITY;
    for k in 0..3 {
        let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
        let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
        min_angle = min_angle.min(cos.acos().to_degrees());
    }
    let s = 0.5 * (l[0] + l[1] + l[2]);
    let circum = l[0] * l[1] * l[2] / (4.0 * area);
    let inr = area / s;
    (min_angle, circum / (2.0 * inr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub vertices: usize,
    pub triangles: usize,
    pub min_angle_deg: f64,
    pub max_aspect_ratio: f64,
    pub orientation_violations: usize,
    /// Edges shared by more than two triangles plus hanging vertices.
    pub conformity_violations: usize,
    /// Boundary edges whose normal fails `n·(c − m) < 0` or whose frame is
    /// not orthonormal.
    pub frame_violations: usize,
    pub unlabeled_boundary_edges: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub quality_bound: f64,
    pub within_quality_bound: bool,
}

impl std::fmt::Display for MeshReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "vertices               {}", self.vertices)?;
        writeln!(f, "triangles              {}", self.triangles)?;
        writeln!(f, "h_max                  {:.6}", self.h_max)?;
        writeln!(f, "h_min                  {:.6}", self.h_min)?;
        writeln!(f, "min angle (deg)        {:.3}", self.min_angle_deg)?;
        writeln!(f, "max aspect ratio       {:.4} (bound {})", self.max_aspect_ratio, self.quality_bound)?;
        writeln!(f, "orientation violations {}", self.orientation_violations)?;
        writeln!(f, "conformity violations  {}", self.conformity_violations)?;
        writeln!(f, "frame violations       {}", self.frame_violations)?;
        write!(f, "unlabeled boundary     {}", self.unlabeled_boundary_edges)
    }
}

/// Quality and consistency diagnostics; never mutates the mesh.
pub fn validate_mesh(mesh: &Mesh) -> MeshReport {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    let mut orientation = 0;
    let mut h_min = f64::INFINITY;
    for t in 0..mesh.triangles.len() {
        let p = mesh.triangle_vertices(t);
        if mesh.signed_area(t) <= 0.0 {
            orientation += 1;
        }
        let (a, r) = triangle_quality(p);
        min_angle = min_angle.min(a);
        max_aspect = max_aspect.max(r);
        let d = (0..3).map(|k| dist(p[k], p[(k + 1) % 3])).fold(0.0, f64::max);
        h_min = h_min.min(d);
    }
    let mut conformity = mesh.edges.iter().filter(|e| e.tris.len() > 2).count();
    conformity += hanging_vertices(mesh);
    let mut frames = 0;
    for b in &mesh.boundary {
        let [i, j] = mesh.edges[b.edge].v;
        let (a, bb) = (mesh.vertices[i], mesh.vertices[j]);
        let m = [(a[0] + bb[0]) / 2.0, (a[1] + bb[1]) / 2.0];
        let c = centroid(&mesh.vertices, &mesh.triangles[b.tri]);
        let n = b.normal;
        let t = b.tangent;
        let outward = n[0] * (c[0] - m[0]) + n[1] * (c[1] - m[1]) < 0.0;
        let ortho = (n[0] * t[0] + n[1] * t[1]).abs() < 1e-12
            && ((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-12
            && ((t[0] * t[0] + t[1] * t[1]).sqrt() - 1.0).abs() < 1e-12;
        if !outward || !ortho {
            frames += 1;
        }
    }
    MeshReport {
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        min_angle_deg: min_angle,
        max_aspect_ratio: max_aspect,
        orientation_violations: orientation,
        conformity_violations: conformity,
        frame_violations: frames,
        unlabeled_boundary_edges: mesh.boundary.iter().filter(|b| b.label.is_none()).count(),
        h_max: mesh.h_max,
        h_min,
        quality_bound: QUALITY_BOUND,
        within_quality_bound: max_aspect <= QUALITY_BOUND,
    }
}

/// Vertices lying strictly inside a boundary edge. In a conforming mesh
/// every such configuration would show up as a T-junction.
fn hanging_vertices(mesh: &Mesh) -> usize {
    if mesh.boundary.is_empty() {
        return 0;
    }
    let loc = PointLocator::new(mesh);
    let mut count = 0;
    for b in &mesh.boundary {
        let [i, j] = mesh.edges[b.edge].v;
        let (a, c) = (mesh.vertices[i], mesh.vertices[j]);
        let len = dist(a, c);
        for v in loc.vertices_near_segment(a, c) {
            if v == i || v == j {
                continue;
            }
            let p = mesh.vertices[v];
            let s = ((p[0] - a[0]) * (c[0] - a[0]) + (p[1] - a[1]) * (c[1] - a[1])) / (len * len);
            if s <= 1e-9 || s >= 1.0 - 1e-9 {
                continue;
            }
            let q = [a[0] + s * (c[0] - a[0]), a[1] + s * (c[1] - a[1])];
            if dist(p, q) < 1e-9 * len {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests;
