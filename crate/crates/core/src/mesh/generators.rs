use std::collections::HashMap;
use std::f64::consts::PI;

use super::{validate_mesh, Mesh, MeshError, GAMMA1, GAMMA2, INNER, OUTER, QUALITY_BOUND};

/// Cell split pattern of the structured square mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquareSplit {
    /// Every cell cut from bottom-left to top-right.
    #[default]
    Diagonal,
    /// Left half cut as `Diagonal`, right half along the other diagonal;
    /// invariant under `x ↦ 1 − x`. Requires even `n`.
    Mirrored,
}

/// `n × n` cells on `(0,1)²`, bottom wall labeled Γ₁ and the rest Γ₂.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    build_unit_square_mesh_with(n, SquareSplit::Diagonal)
}

pub fn build_unit_square_mesh_with(n: usize, split: SquareSplit) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::Parameters("square subdivisions must be at least 1".into()));
    }
    if split == SquareSplit::Mirrored && n % 2 != 0 {
        return Err(MeshError::Parameters(format!("mirrored split needs an even subdivision count, got {n}")));
    }
    let step = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * step, j as f64 * step]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if split == SquareSplit::Mirrored && 2 * i >= n {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    Mesh::from_triangles(vertices, triangles, |a, b| {
        if a[1].abs() < 1e-12 && b[1].abs() < 1e-12 {
            GAMMA1
        } else {
            GAMMA2
        }
    })
}

/// Body-fitted ring mesh of `R1 < |x| < R2` made of concentric vertex rings
/// joined by zipper strips; inner wall labeled 1, outer wall 2.
pub fn build_annulus_mesh(r1: f64, r2: f64, h: f64) -> Result<Mesh, MeshError> {
    if !(r1 > 0.0 && r2 > r1 && r1.is_finite() && r2.is_finite()) {
        return Err(MeshError::Parameters(format!("annulus radii must satisfy 0 < R1 < R2, got {r1}, {r2}")));
    }
    if !(h > 0.0 && h < r2 - r1) {
        return Err(MeshError::Parameters(format!("annulus size h must lie in (0, R2 - R1), got {h}")));
    }
    let layers = ((r2 - r1) / (h * 3f64.sqrt() / 2.0)).ceil() as usize;
    let dr = (r2 - r1) / layers as f64;
    let mut vertices = Vec::new();
    let mut rings: Vec<(usize, usize, f64)> = Vec::with_capacity(layers + 1);
    for k in 0..=layers {
        let r = if k == layers { r2 } else { r1 + k as f64 * dr };
        let n = ((2.0 * PI * r / h).ceil() as usize).max(3);
        let offset = if k % 2 == 1 { PI / n as f64 } else { 0.0 };
        let start = vertices.len();
        for i in 0..n {
            let a = offset + 2.0 * PI * i as f64 / n as f64;
            vertices.push([r * a.cos(), r * a.sin()]);
        }
        rings.push((start, n, offset));
    }
    let mut triangles = Vec::new();
    for k in 0..layers {
        let (sa, na, oa) = rings[k];
        let (sb, nb, ob) = rings[k + 1];
        let ang_a = |i: usize| oa + 2.0 * PI * i as f64 / na as f64;
        // first outer vertex at the angle closest to inner vertex 0
        let j0 = ((oa - ob) / (2.0 * PI / nb as f64)).round().rem_euclid(nb as f64) as usize;
        let base_b = ob + 2.0 * PI * j0 as f64 / nb as f64;
        let base_b = base_b - 2.0 * PI * ((base_b - ang_a(0) + PI) / (2.0 * PI)).floor();
        let ang_b = |j: usize| base_b + 2.0 * PI * j as f64 / nb as f64;
        let a_id = |i: usize| sa + i % na;
        let b_id = |j: usize| sb + (j0 + j) % nb;
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let advance_a = if i == na {
                false
            } else if j == nb {
                true
            } else {
                ang_a(i + 1) <= ang_b(j + 1)
            };
            if advance_a {
                triangles.push([a_id(i), b_id(j), a_id(i + 1)]);
                i += 1;
            } else {
                triangles.push([a_id(i), b_id(j), b_id(j + 1)]);
                j += 1;
            }
        }
    }
    let mid = 0.5 * (r1 + r2);
    let mesh = Mesh::from_triangles(vertices, triangles, |a, _| {
        if (a[0] * a[0] + a[1] * a[1]).sqrt() < mid {
            INNER
        } else {
            OUTER
        }
    })?;
    check_quality(mesh)
}

/// Structured mesh of `(0,8)² \ [1,3]²` with grid step `1/⌈1/h⌉`; obstacle
/// wall labeled 1, outer wall 2.
pub fn build_square_with_hole_mesh(h: f64) -> Result<Mesh, MeshError> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(MeshError::Parameters(format!("obstacle mesh size must lie in (0, 0.5], got {h}")));
    }
    let per_unit = (1.0 / h - 1e-9).ceil() as usize;
    let n = 8 * per_unit;
    let step = 1.0 / per_unit as f64;
    let in_hole = |i: usize, j: usize| {
        // cell (i, j) spans [i, i+1] × [j, j+1] in grid units
        i >= per_unit && i < 3 * per_unit && j >= per_unit && j < 3 * per_unit
    };
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut id = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
        *ids.entry((i, j)).or_insert_with(|| {
            vertices.push([i as f64 * step, j as f64 * step]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if in_hole(i, j) {
                continue;
            }
            let v00 = id(i, j, &mut vertices);
            let v10 = id(i + 1, j, &mut vertices);
            let v11 = id(i + 1, j + 1, &mut vertices);
            let v01 = id(i, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mesh = Mesh::from_triangles(vertices, triangles, |a, b| {
        let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let on_outer = m[0].abs() < 1e-9 || m[1].abs() < 1e-9 || (m[0] - 8.0).abs() < 1e-9 || (m[1] - 8.0).abs() < 1e-9;
        if on_outer {
            OUTER
        } else {
            INNER
        }
    })?;
    check_quality(mesh)
}

fn check_quality(mesh: Mesh) -> Result<Mesh, MeshError> {
    let r = validate_mesh(&mesh);
    if r.max_aspect_ratio > QUALITY_BOUND {
        return Err(MeshError::Quality(r.max_aspect_ratio));
    }
    Ok(mesh)
}
