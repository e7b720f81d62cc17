//! Reference-element bases, DoF functionals and quadrature.
//!
//! All shape functions are written in barycentric coordinates. Derivatives
//! are returned with respect to each `λ_k` treated as an independent
//! variable; because `Σ ∇λ_k = 0` the physical gradient is recovered as
//! `Σ_k ∂φ/∂λ_k ∇λ_k` for any extension off the plane `Σ λ = 1`.
//!
//! Local numbering: edge `k` is opposite vertex `k` and joins vertices
//! `k+1, k+2` (mod 3). The enriched space orders its nine functions as
//! three vertex, three edge and three interior functions.

pub mod quadrature;

use thiserror::Error;

pub use quadrature::{edge_quadrature, quadrature, EdgeRule, QuadratureRule};

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("quadrature of exactness degree {0} is not available")]
    QuadratureDegree(usize),
    #[error("Lagrange degree {0} is not supported")]
    LagrangeDegree(usize),
    #[error("degenerate triangle (signed area {0:e})")]
    Degenerate(f64),
}

/// Default exactness of the volume rule used by assembly.
pub const VOLUME_DEGREE: usize = 10;
/// Default exactness of the boundary-edge rule.
pub const EDGE_DEGREE: usize = 6;

/// Local vertex pair `(i, j)` of edge `k`.
#[inline]
pub fn edge_vertices(k: usize) -> (usize, usize) {
    ((k + 1) % 3, (k + 2) % 3)
}

/// Affine geometry of a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub vertices: [[f64; 2]; 3],
    /// Signed area; positive for counterclockwise orientation.
    pub area: f64,
    /// Physical gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    /// Length of edge `k` (opposite vertex `k`).
    pub edge_len: [f64; 3],
}

impl Triangle {
    pub fn new(vertices: [[f64; 2]; 3]) -> Result<Self, ElementError> {
        let [a, b, c] = vertices;
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
        let scale = (0..3)
            .map(|k| {
                let (i, j) = edge_vertices(k);
                dist(vertices[i], vertices[j])
            })
            .fold(0.0, f64::max);
        if area.abs() <= 1e-14 * scale * scale || !area.is_finite() {
            return Err(ElementError::Degenerate(area));
        }
        let mut grad_lambda = [[0.0; 2]; 3];
        let mut edge_len = [0.0; 3];
        for k in 0..3 {
            let (i, j) = edge_vertices(k);
            let (pi, pj) = (vertices[i], vertices[j]);
            // ∇λ_k is the inward edge normal over twice the area
            grad_lambda[k] = [(pi[1] - pj[1]) / (2.0 * area), (pj[0] - pi[0]) / (2.0 * area)];
            edge_len[k] = dist(pi, pj);
        }
        Ok(Self { vertices, area, grad_lambda, edge_len })
    }

    /// Reference triangle `(0,0), (1,0), (0,1)`.
    pub fn reference() -> Self {
        Self::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("reference triangle")
    }

    pub fn abs_area(&self) -> f64 {
        self.area.abs()
    }

    pub fn map(&self, lambda: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            lambda[0] * v[0][0] + lambda[1] * v[1][0] + lambda[2] * v[2][0],
            lambda[0] * v[0][1] + lambda[1] * v[1][1] + lambda[2] * v[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let mut l = [0.0; 3];
        for k in 1..3 {
            let g = self.grad_lambda[k];
            let vk = self.vertices[k];
            l[k] = 1.0 + g[0] * (x[0] - vk[0]) + g[1] * (x[1] - vk[1]);
        }
        l[0] = 1.0 - l[1] - l[2];
        l
    }

    pub fn centroid(&self) -> [f64; 2] {
        self.map([1.0 / 3.0; 3])
    }

    pub fn diameter(&self) -> f64 {
        self.edge_len.iter().cloned().fold(0.0, f64::max)
    }

    /// Chain rule from barycentric partials to physical gradient.
    #[inline]
    pub fn grad(&self, dlambda: [f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            dlambda[0] * g[0][0] + dlambda[1] * g[1][0] + dlambda[2] * g[2][0],
            dlambda[0] * g[0][1] + dlambda[1] * g[1][1] + dlambda[2] * g[2][1],
        ]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Scalar finite element spaces used by the five fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarSpace {
    P1,
    P2,
    /// `ℙ₂ ⊕ b_K ℙ₁`, nine local functions.
    P2Bubble,
}

impl ScalarSpace {
    pub fn local_dim(self) -> usize {
        match self {
            ScalarSpace::P1 => 3,
            ScalarSpace::P2 => 6,
            ScalarSpace::P2Bubble => 9,
        }
    }

    /// Polynomial degree of the local functions.
    pub fn degree(self) -> usize {
        match self {
            ScalarSpace::P1 => 1,
            ScalarSpace::P2 => 2,
            ScalarSpace::P2Bubble => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarSpace::P1 => "P1",
            ScalarSpace::P2 => "P2",
            ScalarSpace::P2Bubble => "P2b",
        }
    }

    /// Values and barycentric partials written into the first
    /// `local_dim()` slots of the output buffers.
    pub fn eval_into(self, tri: &Triangle, lambda: [f64; 3], vals: &mut [f64], dl: &mut [[f64; 3]]) {
        match self {
            ScalarSpace::P1 => p1_into(lambda, vals, dl),
            ScalarSpace::P2 => p2_into(lambda, vals, dl),
            ScalarSpace::P2Bubble => {
                enriched_into(lambda, tri.edge_len, tri.abs_area(), vals, dl);
            }
        }
    }

    /// Values and physical gradients.
    pub fn eval(self, tri: &Triangle, lambda: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let n = self.local_dim();
        let mut v = vec![0.0; n];
        let mut dl = vec![[0.0; 3]; n];
        self.eval_into(tri, lambda, &mut v, &mut dl);
        (v, dl.iter().map(|d| tri.grad(*d)).collect())
    }
}

fn p1_into(l: [f64; 3], vals: &mut [f64], dl: &mut [[f64; 3]]) {
    for k in 0..3 {
        vals[k] = l[k];
        dl[k] = [0.0; 3];
        dl[k][k] = 1.0;
    }
}

fn p2_into(l: [f64; 3], vals: &mut [f64], dl: &mut [[f64; 3]]) {
    for k in 0..3 {
        vals[k] = l[k] * (2.0 * l[k] - 1.0);
        dl[k] = [0.0; 3];
        dl[k][k] = 4.0 * l[k] - 1.0;
    }
    for k in 0..3 {
        let (i, j) = edge_vertices(k);
        vals[3 + k] = 4.0 * l[i] * l[j];
        dl[3 + k] = [0.0; 3];
        dl[3 + k][i] = 4.0 * l[j];
        dl[3 + k][j] = 4.0 * l[i];
    }
}

fn enriched_into(l: [f64; 3], edge_len: [f64; 3], area: f64, vals: &mut [f64], dl: &mut [[f64; 3]]) {
    let b = l[0] * l[1] * l[2];
    let db = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
    for i in 0..3 {
        let c = 24.0 - 42.0 * l[i];
        vals[i] = l[i] * (3.0 * l[i] - 2.0) + b * c;
        for m in 0..3 {
            dl[i][m] = db[m] * c;
        }
        dl[i][i] += 6.0 * l[i] - 2.0 - 42.0 * b;
    }
    for k in 0..3 {
        let (i, j) = edge_vertices(k);
        let s = 6.0 / edge_len[k];
        let c = 21.0 * l[k] - 12.0;
        vals[3 + k] = s * (l[i] * l[j] + b * c);
        let mut d = [0.0; 3];
        for m in 0..3 {
            d[m] = db[m] * c;
        }
        d[i] += l[j];
        d[j] += l[i];
        d[k] += 21.0 * b;
        dl[3 + k] = [s * d[0], s * d[1], s * d[2]];
    }
    for m in 0..3 {
        let (m1, m2) = edge_vertices(m);
        let s = 1.0 / area;
        let c = 900.0 * l[m] - 360.0 * l[m1] - 360.0 * l[m2];
        vals[6 + m] = s * b * c;
        let mut d = [0.0; 3];
        for q in 0..3 {
            d[q] = db[q] * c;
        }
        d[m] += 900.0 * b;
        d[m1] -= 360.0 * b;
        d[m2] -= 360.0 * b;
        dl[6 + m] = [s * d[0], s * d[1], s * d[2]];
    }
}

/// Values and physical gradients of the nine enriched functions.
pub fn eval_enriched_basis(tri: &Triangle, lambda: [f64; 3]) -> ([f64; 9], [[f64; 2]; 9]) {
    let mut v = [0.0; 9];
    let mut dl = [[0.0; 3]; 9];
    enriched_into(lambda, tri.edge_len, tri.abs_area(), &mut v, &mut dl);
    (v, std::array::from_fn(|i| tri.grad(dl[i])))
}

/// Nodal Lagrange basis of degree 1 or 2: values and physical gradients.
pub fn eval_lagrange_basis(degree: usize, tri: &Triangle, lambda: [f64; 3]) -> Result<(Vec<f64>, Vec<[f64; 2]>), ElementError> {
    match degree {
        1 => Ok(ScalarSpace::P1.eval(tri, lambda)),
        2 => Ok(ScalarSpace::P2.eval(tri, lambda)),
        d => Err(ElementError::LagrangeDegree(d)),
    }
}

/// The nine enriched-space functionals applied to a scalar function given in
/// barycentric coordinates: vertex values, edge integrals `∫_f τ ds` and
/// interior moments `∫_K τ λ_m dx`.
pub fn enriched_dofs(tri: &Triangle, f: impl Fn([f64; 3]) -> f64) -> Result<[f64; 9], ElementError> {
    let mut out = [0.0; 9];
    for i in 0..3 {
        let mut l = [0.0; 3];
        l[i] = 1.0;
        out[i] = f(l);
    }
    let er = edge_quadrature(VOLUME_DEGREE)?;
    for k in 0..3 {
        let (i, j) = edge_vertices(k);
        let mut s = 0.0;
        for (t, w) in er.points.iter().zip(&er.weights) {
            let mut l = [0.0; 3];
            l[i] = 1.0 - t;
            l[j] = *t;
            s += w * f(l);
        }
        out[3 + k] = s * tri.edge_len[k];
    }
    let q = quadrature(VOLUME_DEGREE)?;
    for (l, w) in q.points.iter().zip(&q.weights) {
        let v = f(*l) * w * tri.abs_area();
        for m in 0..3 {
            out[6 + m] += v * l[m];
        }
    }
    Ok(out)
}

/// Unit basis of symmetric 2×2 tensors in the component order
/// `(σ11, σ12, σ22)`: `e1⊗e1`, `e1⊗e2 + e2⊗e1`, `e2⊗e2`.
pub const TENSOR_UNITS: [[[f64; 2]; 2]; 3] = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]];

/// The 27 tensor shape functions of the enriched stress element on `K`,
/// indexed `component * 9 + scalar`.
#[derive(Debug, Clone, Copy)]
pub struct LocalTensorBasis {
    pub tri: Triangle,
}

impl LocalTensorBasis {
    pub const DIM: usize = 27;

    pub fn new(vertices: [[f64; 2]; 3]) -> Result<Self, ElementError> {
        Ok(Self { tri: Triangle::new(vertices)? })
    }

    /// Tensor value of shape function `idx` at `lambda`, as `(σ11, σ12, σ22)`.
    pub fn value(&self, idx: usize, lambda: [f64; 3]) -> [f64; 3] {
        let (v, _) = eval_enriched_basis(&self.tri, lambda);
        let mut out = [0.0; 3];
        out[idx / 9] = v[idx % 9];
        out
    }

    /// All 27 functionals applied to a tensor field given as
    /// `(σ11, σ12, σ22)` in barycentric coordinates.
    pub fn dofs(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<[f64; 27], ElementError> {
        let mut out = [0.0; 27];
        for c in 0..3 {
            let d = enriched_dofs(&self.tri, |l| f(l)[c])?;
            out[c * 9..c * 9 + 9].copy_from_slice(&d);
        }
        Ok(out)
    }

    /// Matrix `D[i][j] = N_i(φ_j)`.
    pub fn duality_matrix(&self) -> Result<Vec<[f64; 27]>, ElementError> {
        (0..27).map(|j| self.dofs(|l| self.value(j, l))).collect::<Result<Vec<_>, _>>().map(|cols| {
            (0..27).map(|i| std::array::from_fn(|j| cols[j][i])).collect()
        })
    }
}

#[cfg(test)]
mod tests;
