//! Mass and stiffness Gram matrices of a single field space.

use super::{element_scalar_dofs, scalar_dim, AssemblyError, CsrMatrix};
use crate::elements::{quadrature, ScalarSpace, Triangle, VOLUME_DEGREE};
use crate::mesh::Mesh;

/// Gram matrix of `Σ_c w_c (l2 (φ_c, ψ_c) + h1 (∇φ_c, ∇ψ_c))` for a field
/// with `weights.len()` components, numbered `comp * scalar_dim + scalar`.
pub fn gram_matrix(mesh: &Mesh, space: ScalarSpace, weights: &[f64], l2: f64, h1: f64) -> Result<CsrMatrix, AssemblyError> {
    let n = scalar_dim(space, mesh);
    let q = quadrature(VOLUME_DEGREE)?;
    let ld = space.local_dim();
    let mut idx = [0usize; 9];
    let mut trip = Vec::with_capacity(mesh.num_triangles() * ld * ld * weights.len());
    let mut local = vec![0.0; ld * ld];
    for t in 0..mesh.num_triangles() {
        let tri = Triangle::new(mesh.triangle_vertices(t))?;
        element_scalar_dofs(space, mesh, t, &mut idx);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (l, w) in q.points.iter().zip(&q.weights) {
            let (vals, grads) = space.eval(&tri, *l);
            let wa = w * tri.abs_area();
            for i in 0..ld {
                for j in 0..ld {
                    local[i * ld + j] += wa * (l2 * vals[i] * vals[j] + h1 * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]));
                }
            }
        }
        for (c, wc) in weights.iter().enumerate() {
            for i in 0..ld {
                for j in 0..ld {
                    trip.push((c * n + idx[i], c * n + idx[j], wc * local[i * ld + j]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n * weights.len(), n * weights.len(), &trip))
}

/// Frobenius weights of the stored `(σ₁₁, σ₁₂, σ₂₂)` components.
pub const TENSOR_WEIGHTS: [f64; 3] = [1.0, 2.0, 1.0];

/// Value and gradient at `lambda` in triangle `t` of the scalar field with
/// global coefficients `coeffs` in `space`.
pub fn eval_scalar(mesh: &Mesh, space: ScalarSpace, coeffs: &[f64], t: usize, tri: &Triangle, lambda: [f64; 3]) -> (f64, [f64; 2]) {
    let mut idx = [0usize; 9];
    let ld = element_scalar_dofs(space, mesh, t, &mut idx);
    let mut v = [0.0; 9];
    let mut dl = [[0.0; 3]; 9];
    space.eval_into(tri, lambda, &mut v, &mut dl);
    let mut val = 0.0;
    let mut g = [0.0; 3];
    for i in 0..ld {
        let c = coeffs[idx[i]];
        val += c * v[i];
        for m in 0..3 {
            g[m] += c * dl[i][m];
        }
    }
    (val, tri.grad(g))
}
