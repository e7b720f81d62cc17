//! Norms, errors, convergence tables, derived moments, line slices,
//! oscillation measures and field export.

mod closure;
mod convergence;
mod export;
mod slice;

use thiserror::Error;

use crate::assembly::{element_scalar_dofs, DofMap, Field};
use crate::elements::{quadrature, Triangle, VOLUME_DEGREE};
use crate::mesh::{Mesh, PointLocator};
use crate::solver::Solution;

pub use closure::{closure_moments, ClosureSample};
pub use convergence::{eoc, eoc_value, ConvergenceRow, ConvergenceTable};
pub use export::{export_fields, read_vtk, write_vtk, VtkData};
pub use slice::{sample_slice, SliceLine, SliceProfile, SliceSample};

#[derive(Debug, Error)]
pub enum PostError {
    #[error("point ({}, {}) lies outside the mesh", .0[0], .0[1])]
    PointLocation([f64; 2]),
    #[error("convergence table: {0}")]
    Table(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Element(#[from] crate::elements::ElementError),
}

/// One value per field in [`Field::ALL`] order.
pub type PerField = [f64; 5];

/// Component weights of the pointwise inner products: the off-diagonal
/// stress entry counts twice in `σ : σ`.
pub fn component_weights(f: Field) -> &'static [f64] {
    match f {
        Field::Sigma => &[1.0, 2.0, 1.0],
        Field::S | Field::U => &[1.0, 1.0],
        Field::P | Field::Theta => &[1.0],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1Semi,
    H1,
}

/// Pointwise evaluation of all fields of a coefficient vector.
pub struct FieldEvaluator<'a> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub coeffs: &'a [f64],
    tris: Vec<Triangle>,
}

/// Values (`[..3]`, unused slots zero) and gradients of one field.
pub type FieldPoint = ([f64; 3], [[f64; 2]; 3]);

impl<'a> FieldEvaluator<'a> {
    pub fn new(mesh: &'a Mesh, dofs: &'a DofMap, coeffs: &'a [f64]) -> Self {
        let tris = (0..mesh.num_triangles()).map(|t| Triangle::new(mesh.triangle_vertices(t)).expect("valid mesh")).collect();
        Self { mesh, dofs, coeffs, tris }
    }

    pub fn of(mesh: &'a Mesh, sol: &'a Solution) -> Self {
        Self::new(mesh, &sol.dofs, &sol.coefficients)
    }

    pub fn triangle(&self, t: usize) -> &Triangle {
        &self.tris[t]
    }

    /// Value and gradient of `f` at barycentric `lambda` in triangle `t`;
    /// `lambda` may lie slightly outside for extrapolation.
    pub fn eval(&self, f: Field, t: usize, lambda: [f64; 3]) -> FieldPoint {
        let space = self.dofs.spaces.get(f);
        let tri = &self.tris[t];
        let mut idx = [0usize; 9];
        let ld = element_scalar_dofs(space, self.mesh, t, &mut idx);
        let mut v = [0.0; 9];
        let mut dl = [[0.0; 3]; 9];
        space.eval_into(tri, lambda, &mut v, &mut dl);
        let mut val = [0.0; 3];
        let mut grad = [[0.0; 2]; 3];
        for c in 0..f.components() {
            let mut g = [0.0; 3];
            for i in 0..ld {
                let coef = self.coeffs[self.dofs.global(f, c, idx[i])];
                val[c] += coef * v[i];
                for m in 0..3 {
                    g[m] += coef * dl[i][m];
                }
            }
            grad[c] = tri.grad(g);
        }
        (val, grad)
    }

    pub fn eval_all(&self, t: usize, lambda: [f64; 3]) -> [FieldPoint; 5] {
        Field::ALL.map(|f| self.eval(f, t, lambda))
    }

    /// Velocity magnitude `|u|`.
    pub fn speed(&self, t: usize, lambda: [f64; 3]) -> f64 {
        let (u, _) = self.eval(Field::U, t, lambda);
        (u[0] * u[0] + u[1] * u[1]).sqrt()
    }
}

fn weighted_sq(f: Field, v: &[f64; 3], g: &[[f64; 2]; 3], kind: NormKind) -> f64 {
    let w = component_weights(f);
    let mut s = 0.0;
    for (c, wc) in w.iter().enumerate() {
        if kind != NormKind::H1Semi {
            s += wc * v[c] * v[c];
        }
        if kind != NormKind::L2 {
            s += wc * (g[c][0] * g[c][0] + g[c][1] * g[c][1]);
        }
    }
    s
}

/// Per-field norms of a coefficient vector, by quadrature of degree 10.
pub fn field_norms_of(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], kind: NormKind) -> PerField {
    let ev = FieldEvaluator::new(mesh, dofs, coeffs);
    let q = quadrature(VOLUME_DEGREE).expect("volume rule");
    let mut out = [0.0; 5];
    for t in 0..mesh.num_triangles() {
        let a = ev.triangle(t).abs_area();
        for (l, w) in q.points.iter().zip(&q.weights) {
            for f in Field::ALL {
                let (v, g) = ev.eval(f, t, *l);
                out[f.index()] += w * a * weighted_sq(f, &v, &g, kind);
            }
        }
    }
    out.map(f64::sqrt)
}

pub fn field_norms(mesh: &Mesh, sol: &Solution, kind: NormKind) -> PerField {
    field_norms_of(mesh, &sol.dofs, &sol.coefficients, kind)
}

/// L² and full H¹ errors per field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldErrors {
    pub l2: PerField,
    pub h1: PerField,
}

/// Reference for [`error_between`].
pub enum Reference<'a> {
    /// Exact field values and gradients per field.
    Analytic(&'a dyn Fn(Field, [f64; 2]) -> FieldPoint),
    /// A discrete solution on another mesh.
    Discrete { mesh: &'a Mesh, solution: &'a Solution },
}

/// Errors of `sol` against `reference`. For a discrete reference the finer
/// of the two meshes is the integration master and the other solution is
/// evaluated by point location; master quadrature points up to half the
/// other mesh's `h_max` outside it (polygonal boundary gaps) use the
/// polynomial extension from the nearest triangle.
pub fn error_between(mesh: &Mesh, sol: &Solution, reference: Reference<'_>) -> Result<FieldErrors, PostError> {
    let q = quadrature(VOLUME_DEGREE)?;
    let mut l2 = [0.0; 5];
    let mut h1 = [0.0; 5];
    let mut add = |f: Field, a: FieldPoint, b: FieldPoint, wa: f64| {
        let dv = std::array::from_fn(|c| a.0[c] - b.0[c]);
        let dg = std::array::from_fn(|c| [a.1[c][0] - b.1[c][0], a.1[c][1] - b.1[c][1]]);
        l2[f.index()] += wa * weighted_sq(f, &dv, &dg, NormKind::L2);
        h1[f.index()] += wa * weighted_sq(f, &dv, &dg, NormKind::H1);
    };
    match reference {
        Reference::Analytic(exact) => {
            let ev = FieldEvaluator::of(mesh, sol);
            for t in 0..mesh.num_triangles() {
                let tri = ev.triangle(t);
                for (l, w) in q.points.iter().zip(&q.weights) {
                    let x = tri.map(*l);
                    for f in Field::ALL {
                        add(f, ev.eval(f, t, *l), exact(f, x), w * tri.abs_area());
                    }
                }
            }
        }
        Reference::Discrete { mesh: other_mesh, solution: other } => {
            let (master_mesh, master, slave_mesh, slave) =
                if other_mesh.num_triangles() >= mesh.num_triangles() { (other_mesh, other, mesh, sol) } else { (mesh, sol, other_mesh, other) };
            let mev = FieldEvaluator::of(master_mesh, master);
            let sev = FieldEvaluator::of(slave_mesh, slave);
            let loc = PointLocator::new(slave_mesh);
            let tol = 0.5 * slave_mesh.h_max;
            for t in 0..master_mesh.num_triangles() {
                let tri = mev.triangle(t);
                for (l, w) in q.points.iter().zip(&q.weights) {
                    let x = tri.map(*l);
                    let (st, sl) = match loc.locate(x) {
                        Some(r) => r,
                        None => {
                            let (st, _) = loc.locate_within(x, tol).ok_or(PostError::PointLocation(x))?;
                            (st, sev.triangle(st).barycentric(x))
                        }
                    };
                    for f in Field::ALL {
                        add(f, mev.eval(f, t, *l), sev.eval(f, st, sl), w * tri.abs_area());
                    }
                }
            }
        }
    }
    Ok(FieldErrors { l2: l2.map(f64::sqrt), h1: h1.map(f64::sqrt) })
}

/// Normalized inter-element jump energy of a scalar quantity:
/// `sqrt(Σ_f |f|² (q̄_K − q̄_K')²) / ‖q‖₀` over interior edges, with `q̄`
/// the element averages.
pub fn oscillation_indicator(mesh: &Mesh, quantity: impl Fn(usize, [f64; 3]) -> f64) -> f64 {
    let q = quadrature(VOLUME_DEGREE).expect("volume rule");
    let mut avg = vec![0.0; mesh.num_triangles()];
    let mut norm2 = 0.0;
    for (t, a) in avg.iter_mut().enumerate() {
        let area = mesh.signed_area(t).abs();
        for (l, w) in q.points.iter().zip(&q.weights) {
            let v = quantity(t, *l);
            *a += w * v;
            norm2 += w * area * v * v;
        }
    }
    let mut jump = 0.0;
    for e in &mesh.edges {
        if let [a, b] = e.tris[..] {
            let (p, r) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
            let len2 = (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2);
            jump += len2 * (avg[a] - avg[b]).powi(2);
        }
    }
    if norm2 == 0.0 {
        0.0
    } else {
        (jump / norm2).sqrt()
    }
}

/// [`oscillation_indicator`] of the velocity magnitude.
pub fn velocity_oscillation(mesh: &Mesh, sol: &Solution) -> f64 {
    let ev = FieldEvaluator::of(mesh, sol);
    oscillation_indicator(mesh, |t, l| ev.speed(t, l))
}

/// `‖f(x) − f(R x)‖₀ / ‖f‖₀` for a scalar component under a point map `R`
/// of the domain onto itself (e.g. a reflection).
pub fn symmetry_defect(mesh: &Mesh, sol: &Solution, f: Field, comp: usize, map: impl Fn([f64; 2]) -> [f64; 2]) -> Result<f64, PostError> {
    let ev = FieldEvaluator::of(mesh, sol);
    let loc = PointLocator::new(mesh);
    let q = quadrature(VOLUME_DEGREE)?;
    let (mut d2, mut n2) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let tri = ev.triangle(t);
        for (l, w) in q.points.iter().zip(&q.weights) {
            let x = tri.map(*l);
            let y = map(x);
            let (st, sl) = loc.locate(y).ok_or(PostError::PointLocation(y))?;
            let a = ev.eval(f, t, *l).0[comp];
            let b = ev.eval(f, st, sl).0[comp];
            d2 += w * tri.abs_area() * (a - b).powi(2);
            n2 += w * tri.abs_area() * a * a;
        }
    }
    Ok(if n2 > 0.0 { (d2 / n2).sqrt() } else { d2.sqrt() })
}

/// Integral of the pressure field.
pub fn pressure_mean(mesh: &Mesh, sol: &Solution) -> f64 {
    let ev = FieldEvaluator::of(mesh, sol);
    let q = quadrature(VOLUME_DEGREE).expect("volume rule");
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let a = ev.triangle(t).abs_area();
        for (l, w) in q.points.iter().zip(&q.weights) {
            s += w * a * ev.eval(Field::P, t, *l).0[0];
        }
    }
    s
}

#[cfg(test)]
mod tests;
