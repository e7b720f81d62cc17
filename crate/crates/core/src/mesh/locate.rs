//! Bucket-grid point location.

use super::Mesh;
use crate::elements::Triangle;

/// Uniform grid of triangle bounding boxes over the mesh extent.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    tri_buckets: Vec<Vec<usize>>,
    vert_buckets: Vec<Vec<usize>>,
    tris: Vec<[[f64; 2]; 3]>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let target = (mesh.triangles.len().max(1) as f64).sqrt().ceil();
        let cell = (span / target).max(mesh.h_max * 0.5).max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut tri_buckets = vec![Vec::new(); nx * ny];
        let mut vert_buckets = vec![Vec::new(); nx * ny];
        let mut tris = Vec::with_capacity(mesh.triangles.len());
        let loc = Self { origin: lo, cell, nx, ny, tri_buckets: Vec::new(), vert_buckets: Vec::new(), tris: Vec::new() };
        for t in 0..mesh.triangles.len() {
            let p = mesh.triangle_vertices(t);
            let (ia, ja) = loc.cell_of([p[0][0].min(p[1][0]).min(p[2][0]), p[0][1].min(p[1][1]).min(p[2][1])]);
            let (ib, jb) = loc.cell_of([p[0][0].max(p[1][0]).max(p[2][0]), p[0][1].max(p[1][1]).max(p[2][1])]);
            for j in ja..=jb {
                for i in ia..=ib {
                    tri_buckets[j * nx + i].push(t);
                }
            }
            tris.push(p);
        }
        for (v, x) in mesh.vertices.iter().enumerate() {
            let (i, j) = loc.cell_of(*x);
            vert_buckets[j * nx + i].push(v);
        }
        Self { tri_buckets, vert_buckets, tris, ..loc }
    }

    fn cell_of(&self, x: [f64; 2]) -> (usize, usize) {
        let i = ((x[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((x[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Triangle containing `x` (barycentric coordinates ≥ −1e−12) and the
    /// barycentric coordinates of `x` in it.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.cell_of(x);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.tri_buckets[j * self.nx + i] {
            let Ok(tri) = Triangle::new(self.tris[t]) else { continue };
            let l = tri.barycentric(x);
            let m = l[0].min(l[1]).min(l[2]);
            if m >= -1e-12 && best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        best.map(|(t, l, _)| (t, clamp_bary(l)))
    }

    /// Like [`locate`](Self::locate), falling back to the closest triangle
    /// within distance `tol` of `x`; the returned coordinates are those of the
    /// closest point of that triangle.
    pub fn locate_within(&self, x: [f64; 2], tol: f64) -> Option<(usize, [f64; 3])> {
        if let Some(r) = self.locate(x) {
            return Some(r);
        }
        let (ia, ja) = self.cell_of([x[0] - tol, x[1] - tol]);
        let (ib, jb) = self.cell_of([x[0] + tol, x[1] + tol]);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for j in ja..=jb {
            for i in ia..=ib {
                for &t in &self.tri_buckets[j * self.nx + i] {
                    let (d, l) = closest_point(&self.tris[t], x);
                    if d <= tol && best.as_ref().is_none_or(|b| d < b.2) {
                        best = Some((t, l, d));
                    }
                }
            }
        }
        best.map(|(t, l, _)| (t, l))
    }

    /// Candidate vertices in the buckets overlapped by segment `ab`.
    pub fn vertices_near_segment(&self, a: [f64; 2], b: [f64; 2]) -> Vec<usize> {
        let (ia, ja) = self.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
        let (ib, jb) = self.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
        let mut out = Vec::new();
        for j in ja..=jb {
            for i in ia..=ib {
                out.extend_from_slice(&self.vert_buckets[j * self.nx + i]);
            }
        }
        out
    }
}

fn clamp_bary(l: [f64; 3]) -> [f64; 3] {
    let c = [l[0].max(0.0), l[1].max(0.0), l[2].max(0.0)];
    let s = c[0] + c[1] + c[2];
    [c[0] / s, c[1] / s, c[2] / s]
}

/// Distance from `x` to the closed triangle and the barycentric coordinates
/// of the closest point.
fn closest_point(p: &[[f64; 2]; 3], x: [f64; 2]) -> (f64, [f64; 3]) {
    if let Ok(tri) = Triangle::new(*p) {
        let l = tri.barycentric(x);
        if l.iter().all(|v| *v >= 0.0) {
            return (0.0, l);
        }
    }
    let mut best = (f64::INFINITY, [1.0, 0.0, 0.0]);
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let (a, b) = (p[i], p[j]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let s = if len2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = [a[0] + s * d[0], a[1] + s * d[1]];
        let dist = ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)).sqrt();
        if dist < best.0 {
            let mut l = [0.0; 3];
            l[i] = 1.0 - s;
            l[j] = s;
            best = (dist, l);
        }
    }
    best
}
