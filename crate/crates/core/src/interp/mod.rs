//! Canonical DoF interpolation and the trace-preserving quasi-interpolant
//! `𝓘ₕ` into the enriched stress space with zero boundary trace.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use thiserror::Error;

use crate::assembly::{element_scalar_dofs, scalar_dim, DofMap, Field};
use crate::elements::{edge_quadrature, quadrature, ElementError, LocalTensorBasis, ScalarSpace, Triangle, VOLUME_DEGREE};
use crate::mesh::Mesh;

const P2B: ScalarSpace = ScalarSpace::P2Bubble;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("local Gram matrix of triangle {0} is singular")]
    SingularGram(usize),
}

/// Applies the DoF functionals of `field`'s space to `f` (component values
/// in slots `0..components`) and writes them into a vector of length
/// `dofs.total`; other fields stay zero.
pub fn canonical_interpolant(mesh: &Mesh, dofs: &DofMap, field: Field, f: impl Fn([f64; 2]) -> [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; dofs.total];
    let coeffs = scalar_canonical(mesh, dofs.spaces.get(field), &f, field.components());
    for c in 0..field.components() {
        for (s, v) in coeffs[c].iter().enumerate() {
            out[dofs.global(field, c, s)] = *v;
        }
    }
    out
}

/// Canonical coefficients per component for a scalar space.
pub fn scalar_canonical(mesh: &Mesh, space: ScalarSpace, f: &impl Fn([f64; 2]) -> [f64; 3], ncomp: usize) -> Vec<Vec<f64>> {
    let n = scalar_dim(space, mesh);
    let nv = mesh.num_vertices();
    let mut out = vec![vec![0.0; n]; ncomp];
    for (v, x) in mesh.vertices.iter().enumerate() {
        let val = f(*x);
        for c in 0..ncomp {
            out[c][v] = val[c];
        }
    }
    match space {
        ScalarSpace::P1 => {}
        ScalarSpace::P2 => {
            for (e, edge) in mesh.edges.iter().enumerate() {
                let (a, b) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
                let val = f([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
                for c in 0..ncomp {
                    out[c][nv + e] = val[c];
                }
            }
        }
        ScalarSpace::P2Bubble => {
            let er = edge_quadrature(VOLUME_DEGREE).expect("edge rule");
            for (e, edge) in mesh.edges.iter().enumerate() {
                let (a, b) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                for (s, w) in er.points.iter().zip(&er.weights) {
                    let val = f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                    for c in 0..ncomp {
                        out[c][nv + e] += w * len * val[c];
                    }
                }
            }
            let q = quadrature(VOLUME_DEGREE).expect("volume rule");
            let base = nv + mesh.num_edges();
            for t in 0..mesh.num_triangles() {
                let tri = Triangle::new(mesh.triangle_vertices(t)).expect("valid mesh");
                for (l, w) in q.points.iter().zip(&q.weights) {
                    let val = f(tri.map(*l));
                    for c in 0..ncomp {
                        for m in 0..3 {
                            out[c][base + 3 * t + m] += w * tri.abs_area() * val[c] * l[m];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Scalar mass matrix of the enriched space on `tri`.
fn local_mass(tri: &Triangle) -> Result<Mat<f64>, InterpError> {
    let q = quadrature(VOLUME_DEGREE)?;
    let mut m = Mat::<f64>::zeros(9, 9);
    for (l, w) in q.points.iter().zip(&q.weights) {
        let (v, _) = P2B.eval(tri, *l);
        for i in 0..9 {
            for j in 0..9 {
                m[(i, j)] += w * tri.abs_area() * v[i] * v[j];
            }
        }
    }
    Ok(m)
}

fn project_with(tri: &Triangle, llt: &Llt<f64>, tau: &impl Fn([f64; 3]) -> [f64; 3]) -> Result<[f64; 27], InterpError> {
    let q = quadrature(VOLUME_DEGREE)?;
    let mut rhs = Mat::<f64>::zeros(9, 3);
    for (l, w) in q.points.iter().zip(&q.weights) {
        let (v, _) = P2B.eval(tri, *l);
        let t = tau(*l);
        for i in 0..9 {
            for c in 0..3 {
                rhs[(i, c)] += w * tri.abs_area() * v[i] * t[c];
            }
        }
    }
    llt.solve_in_place(rhs.as_mut());
    Ok(std::array::from_fn(|k| rhs[(k % 9, k / 9)]))
}

/// `L²(K)`-orthogonal projection of `tau` (given in barycentric coordinates
/// as `(σ11, σ12, σ22)`) onto the 27 local shape functions, in
/// [`LocalTensorBasis`] order. The shape functions are dual to the local
/// DoFs, so the coefficients are the DoF values of `Q_K τ`.
pub fn local_l2_projection(basis: &LocalTensorBasis, tau: impl Fn([f64; 3]) -> [f64; 3]) -> Result<[f64; 27], InterpError> {
    let llt = local_mass(&basis.tri)?.llt(Side::Lower).map_err(|_| InterpError::SingularGram(0))?;
    project_with(&basis.tri, &llt, &tau)
}

/// Mesh data needed by `𝓘ₕ`: vertex and edge patches, boundary flags and
/// the factored local Gram matrices.
pub struct InterpolationContext<'m> {
    pub mesh: &'m Mesh,
    pub vertex_patches: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    tris: Vec<Triangle>,
    gram: Vec<Llt<f64>>,
}

impl<'m> InterpolationContext<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Self, InterpError> {
        let mut vertex_patches = vec![Vec::new(); mesh.num_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for v in tri {
                vertex_patches[*v].push(t);
            }
        }
        let mut boundary_vertex = vec![false; mesh.num_vertices()];
        for b in &mesh.boundary {
            for v in mesh.edges[b.edge].v {
                boundary_vertex[v] = true;
            }
        }
        let mut tris = Vec::with_capacity(mesh.num_triangles());
        let mut gram = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let tri = Triangle::new(mesh.triangle_vertices(t))?;
            gram.push(local_mass(&tri)?.llt(Side::Lower).map_err(|_| InterpError::SingularGram(t))?);
            tris.push(tri);
        }
        Ok(Self { mesh, vertex_patches, boundary_vertex, tris, gram })
    }

    /// Length of the coefficient vector of an enriched tensor field,
    /// numbered `component * scalar_dim + scalar`.
    pub fn field_len(&self) -> usize {
        3 * scalar_dim(P2B, self.mesh)
    }

    /// `𝓘ₕτ` for `tau` given per triangle in barycentric coordinates.
    pub fn interpolate_local(&self, tau: impl Fn(usize, [f64; 3]) -> [f64; 3]) -> Result<Vec<f64>, InterpError> {
        let mesh = self.mesh;
        let n = scalar_dim(P2B, mesh);
        let nv = mesh.num_vertices();
        let mut out = vec![0.0; 3 * n];
        let mut count = vec![0usize; nv + mesh.num_edges()];
        let mut idx = [0usize; 9];
        for t in 0..mesh.num_triangles() {
            let tri = &self.tris[t];
            let f = |l: [f64; 3]| tau(t, l);
            let qk = project_with(tri, &self.gram[t], &f)?;
            element_scalar_dofs(P2B, mesh, t, &mut idx);
            for k in 0..6 {
                let g = idx[k];
                let on_boundary = if k < 3 { self.boundary_vertex[g] } else { mesh.edges[g - nv].is_boundary() };
                if on_boundary {
                    continue;
                }
                count[g] += 1;
                for c in 0..3 {
                    out[c * n + g] += qk[c * 9 + k];
                }
            }
            let exact = LocalTensorBasis { tri: *tri }.dofs(f)?;
            for m in 6..9 {
                for c in 0..3 {
                    out[c * n + idx[m]] = exact[c * 9 + m];
                }
            }
        }
        for (g, k) in count.iter().enumerate() {
            if *k > 0 {
                for c in 0..3 {
                    out[c * n + g] /= *k as f64;
                }
            }
        }
        Ok(out)
    }

    /// `𝓘ₕτ` for a field given in physical coordinates.
    pub fn interpolate(&self, tau: impl Fn([f64; 2]) -> [f64; 3]) -> Result<Vec<f64>, InterpError> {
        self.interpolate_local(|t, l| tau(self.tris[t].map(l)))
    }

    /// Value of an enriched tensor field with coefficients `coeffs` at
    /// `lambda` in triangle `t`.
    pub fn eval(&self, coeffs: &[f64], t: usize, lambda: [f64; 3]) -> [f64; 3] {
        let n = scalar_dim(P2B, self.mesh);
        let mut idx = [0usize; 9];
        element_scalar_dofs(P2B, self.mesh, t, &mut idx);
        let (v, _) = P2B.eval(&self.tris[t], lambda);
        std::array::from_fn(|c| (0..9).map(|i| coeffs[c * n + idx[i]] * v[i]).sum())
    }

    pub fn triangle(&self, t: usize) -> &Triangle {
        &self.tris[t]
    }
}
