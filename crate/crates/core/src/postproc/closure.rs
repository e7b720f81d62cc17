//! Higher-order moments reconstructed from the discrete fields.

use super::FieldEvaluator;
use crate::assembly::Field;
use crate::elements::{quadrature, VOLUME_DEGREE};
use crate::mesh::Mesh;
use crate::solver::Solution;
use crate::tensorops::{embed_2d, stf3_project, stf_project, SymTensor2, ThirdOrderTensor3};

/// Moments at one quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureSample {
    pub tri: usize,
    pub x: [f64; 2],
    /// `m = −2 Kn Stf∇σ̃`.
    pub m: ThirdOrderTensor3,
    /// `R = −(24/5) Kn stf∇s`, in the 3D embedding.
    pub r: [[f64; 3]; 3],
    /// `Δ = −12 Kn ∇·s`.
    pub delta: f64,
}

/// `∇σ̃` with the gradient index last; the embedded tensor has
/// `σ̃₃₃ = −(σ₁₁ + σ₂₂)` and no out-of-plane derivatives.
pub fn embedded_gradient(grad: &[[f64; 2]; 3]) -> ThirdOrderTensor3 {
    let mut g = ThirdOrderTensor3::default();
    for a in 0..2 {
        let e = embed_2d(&SymTensor2::new(grad[0][a], grad[1][a], grad[2][a])).0;
        for i in 0..3 {
            for j in 0..3 {
                g.set(i, j, a, e[i][j]);
            }
        }
    }
    g
}

pub fn closure_moments(mesh: &Mesh, sol: &Solution) -> Vec<ClosureSample> {
    let ev = FieldEvaluator::of(mesh, sol);
    let kn = sol.params.kn;
    let q = quadrature(VOLUME_DEGREE).expect("volume rule");
    let mut out = Vec::with_capacity(mesh.num_triangles() * q.points.len());
    for t in 0..mesh.num_triangles() {
        for l in &q.points {
            let (_, gs) = ev.eval(Field::Sigma, t, *l);
            let mut m = stf3_project(&embedded_gradient(&gs));
            for v in m.0.iter_mut() {
                *v *= -2.0 * kn;
            }
            let (_, gv) = ev.eval(Field::S, t, *l);
            let grad_s = [[gv[0][0], gv[0][1], 0.0], [gv[1][0], gv[1][1], 0.0], [0.0; 3]];
            let r = stf_project(&grad_s).map(|row| row.map(|v| -24.0 / 5.0 * kn * v));
            let delta = -12.0 * kn * (gv[0][0] + gv[1][1]);
            out.push(ClosureSample { tri: t, x: ev.triangle(t).map(*l), m, r, delta });
        }
    }
    out
}
