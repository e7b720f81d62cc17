//! Element kernels of the bilinear forms and the global sweep.

use std::sync::OnceLock;

use super::{element_scalar_dofs, AssemblyError, CsrMatrix, DofMap, Field, Params, Term, WallData};
use crate::elements::{edge_quadrature, edge_vertices, quadrature, Triangle, EDGE_DEGREE, TENSOR_UNITS, VOLUME_DEGREE};
use crate::mesh::Mesh;
use crate::tensorops::{embed_2d, stf3_project, SymTensor2, ThirdOrderTensor3};

/// Individual bilinear forms; the argument order follows `f(first, second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// `a(s, r)` volume part.
    AVolume,
    ABoundary,
    /// `c(r, σ)` volume part.
    CVolume,
    CBoundary,
    /// `d(σ, τ)` volume part.
    DVolume,
    DBoundary,
    /// `b(θ, r) = (θ, ∇·r)`.
    B,
    /// `e(u, τ) = (∇·τ, u)`.
    E,
    /// `g(p, v) = (v, ∇p)`.
    G,
    /// `μ ∫ p`, the multiplier row.
    Mean,
}

impl Form {
    /// Fields of the first and second argument.
    pub fn fields(self) -> (Field, Field) {
        match self {
            Form::AVolume | Form::ABoundary => (Field::S, Field::S),
            Form::CVolume | Form::CBoundary => (Field::S, Field::Sigma),
            Form::DVolume | Form::DBoundary => (Field::Sigma, Field::Sigma),
            Form::B => (Field::Theta, Field::S),
            Form::E => (Field::U, Field::Sigma),
            Form::G | Form::Mean => (Field::P, Field::U),
        }
    }

    fn is_boundary(self) -> bool {
        matches!(self, Form::ABoundary | Form::CBoundary | Form::DBoundary)
    }
}

/// Gram matrix of `Stf(Ẽ_c ⊗ e_a)` over the six pairs `(c, a)`, index
/// `2c + a`, so that `Stf∇σ̃ : Stf∇τ̃ = Σ ∂_aσ_c ∂_bτ_d G[2c+a][2d+b]`.
#[derive(Debug, Clone)]
pub struct StfMetric {
    pub g: [[f64; 6]; 6],
    pub maps: [ThirdOrderTensor3; 6],
}

pub fn stf_gradient_metric() -> &'static StfMetric {
    static METRIC: OnceLock<StfMetric> = OnceLock::new();
    METRIC.get_or_init(|| {
        let maps: [ThirdOrderTensor3; 6] = std::array::from_fn(|ca| {
            let (c, a) = (ca / 2, ca % 2);
            let u = TENSOR_UNITS[c];
            let e = embed_2d(&SymTensor2::new(u[0][0], u[0][1], u[1][1])).0;
            let mut m = ThirdOrderTensor3::default();
            for i in 0..3 {
                for j in 0..3 {
                    m.set(i, j, a, e[i][j]);
                }
            }
            stf3_project(&m)
        });
        let g = std::array::from_fn(|p| std::array::from_fn(|q| maps[p].ddot(&maps[q])));
        StfMetric { g, maps }
    })
}

/// `σ̃ : τ̃` on the component basis `(σ11, σ12, σ22)`.
pub(crate) const EMBEDDED_MASS: [[f64; 3]; 3] = [[2.0, 0.0, 1.0], [0.0, 2.0, 0.0], [1.0, 0.0, 2.0]];

/// Normal/tangent traces of the unit tensors: `(nᵀE_c n, tᵀE_c t, nᵀE_c t)`.
pub(crate) fn frame_traces(n: [f64; 2], t: [f64; 2]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let nn = [n[0] * n[0], 2.0 * n[0] * n[1], n[1] * n[1]];
    let tt = [t[0] * t[0], 2.0 * t[0] * t[1], t[1] * t[1]];
    let nt = [n[0] * t[0], n[0] * t[1] + n[1] * t[0], n[1] * t[1]];
    (nn, tt, nt)
}

const MAXL: usize = 9;

/// Basis data of every field at one point.
struct PointData {
    vals: [[f64; MAXL]; 5],
    grads: [[[f64; 2]; MAXL]; 5],
}

impl PointData {
    fn new() -> Self {
        Self { vals: [[0.0; MAXL]; 5], grads: [[[0.0; 2]; MAXL]; 5] }
    }

    fn fill(&mut self, dofs: &DofMap, tri: &Triangle, lam: [f64; 3]) {
        let mut dl = [[0.0; 3]; MAXL];
        for f in Field::ALL {
            let sp = dofs.spaces.get(f);
            let fi = f.index();
            sp.eval_into(tri, lam, &mut self.vals[fi], &mut dl);
            for i in 0..sp.local_dim() {
                self.grads[fi][i] = tri.grad(dl[i]);
            }
        }
    }
}

/// Local dense matrix over all field DoFs of one element.
struct Local {
    n: usize,
    lo: [usize; 5],
    nl: [usize; 5],
    m: Vec<f64>,
}

impl Local {
    fn new(dofs: &DofMap) -> Self {
        let mut lo = [0; 5];
        let mut nl = [0; 5];
        let mut n = 0;
        for f in Field::ALL {
            lo[f.index()] = n;
            nl[f.index()] = dofs.spaces.get(f).local_dim();
            n += f.components() * nl[f.index()];
        }
        Self { n, lo, nl, m: vec![0.0; n * n] }
    }

    #[inline]
    fn loc(&self, f: Field, comp: usize, i: usize) -> usize {
        self.lo[f.index()] + comp * self.nl[f.index()] + i
    }

    #[inline]
    fn put(&mut self, row: usize, col: usize, v: f64, term: &Term) {
        if term.direct != 0.0 {
            self.m[row * self.n + col] += term.direct * v;
        }
        if term.transpose != 0.0 {
            self.m[col * self.n + row] += term.transpose * v;
        }
    }
}

fn volume_kernel(loc: &mut Local, term: &Term, pd: &PointData, w: f64, params: Params) {
    let (kn, metric) = (params.kn, stf_gradient_metric());
    let (si, ti, ui, pi, thi) = (Field::S.index(), Field::Sigma.index(), Field::U.index(), Field::P.index(), Field::Theta.index());
    let (ns, nt, nu, np, nth) = (loc.nl[si], loc.nl[ti], loc.nl[ui], loc.nl[pi], loc.nl[thi]);
    match term.form {
        Form::AVolume => {
            let (v, g) = (&pd.vals[si], &pd.grads[si]);
            for i in 0..ns {
                for j in 0..ns {
                    let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    let mass = 4.0 / 15.0 / kn * v[i] * v[j];
                    for a in 0..2 {
                        for b in 0..2 {
                            let d = if a == b { 1.0 } else { 0.0 };
                            let val = 24.0 / 25.0 * kn * 0.5 * (d * gg + g[i][b] * g[j][a])
                                + 12.0 / 25.0 * kn * g[i][a] * g[j][b]
                                + d * mass;
                            let (r, c) = (loc.loc(Field::S, b, j), loc.loc(Field::S, a, i));
                            loc.put(r, c, w * val, term);
                        }
                    }
                }
            }
        }
        Form::CVolume => {
            // 2/5 (σ, ∇r), σ = φ_i E_c, r = ψ_j e_b
            let (sv, gr) = (&pd.vals[ti], &pd.grads[si]);
            for i in 0..nt {
                for c in 0..3 {
                    let e = TENSOR_UNITS[c];
                    for j in 0..ns {
                        for b in 0..2 {
                            let val = 0.4 * sv[i] * (e[b][0] * gr[j][0] + e[b][1] * gr[j][1]);
                            if val != 0.0 {
                                let (r, cc) = (loc.loc(Field::Sigma, c, i), loc.loc(Field::S, b, j));
                                loc.put(r, cc, w * val, term);
                            }
                        }
                    }
                }
            }
        }
        Form::DVolume => {
            let (v, g) = (&pd.vals[ti], &pd.grads[ti]);
            for i in 0..nt {
                for j in 0..nt {
                    let vv = v[i] * v[j];
                    for c in 0..3 {
                        for d in 0..3 {
                            let mut k = 0.0;
                            for a in 0..2 {
                                for b in 0..2 {
                                    k += g[i][a] * g[j][b] * metric.g[2 * c + a][2 * d + b];
                                }
                            }
                            let val = kn * k + 0.5 / kn * EMBEDDED_MASS[c][d] * vv;
                            let (r, cc) = (loc.loc(Field::Sigma, d, j), loc.loc(Field::Sigma, c, i));
                            loc.put(r, cc, w * val, term);
                        }
                    }
                }
            }
        }
        Form::B => {
            let (th, gr) = (&pd.vals[thi], &pd.grads[si]);
            for i in 0..nth {
                for j in 0..ns {
                    for b in 0..2 {
                        let (r, c) = (loc.loc(Field::S, b, j), loc.loc(Field::Theta, 0, i));
                        loc.put(r, c, w * th[i] * gr[j][b], term);
                    }
                }
            }
        }
        Form::E => {
            // (∇·τ, u), τ = φ_j E_d, u = ψ_i e_a
            let (uv, gt) = (&pd.vals[ui], &pd.grads[ti]);
            for i in 0..nu {
                for a in 0..2 {
                    for j in 0..nt {
                        for d in 0..3 {
                            let e = TENSOR_UNITS[d];
                            let div = e[a][0] * gt[j][0] + e[a][1] * gt[j][1];
                            if div != 0.0 {
                                let (r, c) = (loc.loc(Field::Sigma, d, j), loc.loc(Field::U, a, i));
                                loc.put(r, c, w * uv[i] * div, term);
                            }
                        }
                    }
                }
            }
        }
        Form::G => {
            let (gp, uv) = (&pd.grads[pi], &pd.vals[ui]);
            for i in 0..np {
                for j in 0..nu {
                    for b in 0..2 {
                        let (r, c) = (loc.loc(Field::U, b, j), loc.loc(Field::P, 0, i));
                        loc.put(r, c, w * uv[j] * gp[i][b], term);
                    }
                }
            }
        }
        _ => {}
    }
}

fn boundary_kernel(loc: &mut Local, term: &Term, pd: &PointData, w: f64, n: [f64; 2], t: [f64; 2], params: Params) {
    let chi = params.chi;
    let (si, ti) = (Field::S.index(), Field::Sigma.index());
    let (ns, nt) = (loc.nl[si], loc.nl[ti]);
    let (nn, tt, ntr) = frame_traces(n, t);
    match term.form {
        Form::ABoundary => {
            let v = &pd.vals[si];
            for i in 0..ns {
                for j in 0..ns {
                    for a in 0..2 {
                        for b in 0..2 {
                            let k = 0.5 / chi * n[a] * n[b] + 12.0 / 25.0 * chi * t[a] * t[b];
                            let (r, c) = (loc.loc(Field::S, b, j), loc.loc(Field::S, a, i));
                            loc.put(r, c, w * v[i] * v[j] * k, term);
                        }
                    }
                }
            }
        }
        Form::CBoundary => {
            let (sv, rv) = (&pd.vals[ti], &pd.vals[si]);
            for i in 0..nt {
                for c in 0..3 {
                    for j in 0..ns {
                        for b in 0..2 {
                            let k = -3.0 / 20.0 * nn[c] * n[b] - 0.2 * ntr[c] * t[b];
                            let (r, cc) = (loc.loc(Field::Sigma, c, i), loc.loc(Field::S, b, j));
                            loc.put(r, cc, w * sv[i] * rv[j] * k, term);
                        }
                    }
                }
            }
        }
        Form::DBoundary => {
            let v = &pd.vals[ti];
            for i in 0..nt {
                for j in 0..nt {
                    for c in 0..3 {
                        for d in 0..3 {
                            let k = 9.0 / 8.0 * chi * nn[c] * nn[d]
                                + chi * (tt[c] + 0.5 * nn[c]) * (tt[d] + 0.5 * nn[d])
                                + 1.0 / chi * ntr[c] * ntr[d];
                            let (r, cc) = (loc.loc(Field::Sigma, d, j), loc.loc(Field::Sigma, c, i));
                            loc.put(r, cc, w * v[i] * v[j] * k, term);
                        }
                    }
                }
            }
        }
        _ => {}
    }
}

/// Barycentric coordinates along local edge `k` at parameter `s`.
pub(crate) fn edge_lambda(k: usize, s: f64) -> [f64; 3] {
    let (i, j) = edge_vertices(k);
    let mut l = [0.0; 3];
    l[i] = 1.0 - s;
    l[j] = s;
    l
}

/// Global indices of every local DoF of element `t`, in `Local` order.
fn element_globals(mesh: &Mesh, dofs: &DofMap, t: usize, out: &mut Vec<usize>) {
    out.clear();
    let mut sd = [0usize; MAXL];
    for f in Field::ALL {
        let n = element_scalar_dofs(dofs.spaces.get(f), mesh, t, &mut sd);
        for c in 0..f.components() {
            for &s in &sd[..n] {
                out.push(dofs.global(f, c, s));
            }
        }
    }
}

fn coupled(terms: &[Term]) -> [[bool; 5]; 5] {
    let mut c = [[false; 5]; 5];
    for t in terms {
        if t.form == Form::Mean {
            continue;
        }
        let (first, second) = t.form.fields();
        if t.direct != 0.0 {
            c[second.index()][first.index()] = true;
        }
        if t.transpose != 0.0 {
            c[first.index()][second.index()] = true;
        }
    }
    c
}

fn build_pattern(mesh: &Mesh, dofs: &DofMap, terms: &[Term]) -> CsrMatrix {
    let nt = mesh.num_triangles();
    let coupling = coupled(terms);
    let mean = terms.iter().find(|t| t.form == Form::Mean);
    let mut sd = [0usize; MAXL];
    // scalar dof → elements, per field
    let mut incidence: Vec<Vec<Vec<usize>>> = Vec::with_capacity(5);
    for f in Field::ALL {
        let mut inc = vec![Vec::new(); dofs.scalar_dims[f.index()]];
        for t in 0..nt {
            let n = element_scalar_dofs(dofs.spaces.get(f), mesh, t, &mut sd);
            for &s in &sd[..n] {
                inc[s].push(t);
            }
        }
        incidence.push(inc);
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dofs.total];
    let mut mark = vec![usize::MAX; dofs.total];
    for f in Field::ALL {
        let fi = f.index();
        for s in 0..dofs.scalar_dims[fi] {
            let row0 = dofs.global(f, 0, s);
            let mut cols = Vec::new();
            for &t in &incidence[fi][s] {
                for g in Field::ALL {
                    if !coupling[fi][g.index()] {
                        continue;
                    }
                    let n = element_scalar_dofs(dofs.spaces.get(g), mesh, t, &mut sd);
                    for c in 0..g.components() {
                        for &x in &sd[..n] {
                            let j = dofs.global(g, c, x);
                            if mark[j] != row0 {
                                mark[j] = row0;
                                cols.push(j);
                            }
                        }
                    }
                }
            }
            if f == Field::P && mean.is_some_and(|m| m.transpose != 0.0) {
                cols.push(dofs.multiplier);
            }
            cols.sort_unstable();
            for c in 0..f.components() {
                rows[dofs.global(f, c, s)] = cols.clone();
            }
        }
    }
    if mean.is_some_and(|m| m.direct != 0.0) {
        rows[dofs.multiplier] = dofs.range(Field::P).collect();
    }
    CsrMatrix::from_pattern(dofs.total, rows)
}

pub(super) fn assemble(mesh: &Mesh, dofs: &DofMap, params: Params, terms: &[Term]) -> Result<CsrMatrix, AssemblyError> {
    let mut k = build_pattern(mesh, dofs, terms);
    let vol = quadrature(VOLUME_DEGREE)?;
    let er = edge_quadrature(EDGE_DEGREE)?;
    let mut bnd_of: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_triangles()];
    for (b, be) in mesh.boundary.iter().enumerate() {
        bnd_of[be.tri].push(b);
    }
    let has_volume = terms.iter().any(|t| !t.form.is_boundary() && t.form != Form::Mean);
    let has_boundary = terms.iter().any(|t| t.form.is_boundary());
    let mean = terms.iter().find(|t| t.form == Form::Mean).copied();
    let mut loc = Local::new(dofs);
    let mut pd = PointData::new();
    let mut globals = Vec::with_capacity(loc.n);
    let mut sd = [0usize; MAXL];
    for t in 0..mesh.num_triangles() {
        let tri = Triangle::new(mesh.triangle_vertices(t))?;
        loc.m.iter_mut().for_each(|v| *v = 0.0);
        let area = tri.abs_area();
        if has_volume {
            for (lam, w) in vol.points.iter().zip(&vol.weights) {
                pd.fill(dofs, &tri, *lam);
                for term in terms {
                    volume_kernel(&mut loc, term, &pd, w * area, params);
                }
            }
        }
        if has_boundary {
            for &b in &bnd_of[t] {
                let be = &mesh.boundary[b];
                for (s, w) in er.points.iter().zip(&er.weights) {
                    pd.fill(dofs, &tri, edge_lambda(be.local, *s));
                    for term in terms.iter().filter(|t| t.form.is_boundary()) {
                        boundary_kernel(&mut loc, term, &pd, w * be.length, be.normal, be.tangent, params);
                    }
                }
            }
        }
        element_globals(mesh, dofs, t, &mut globals);
        for r in 0..loc.n {
            for c in 0..loc.n {
                let v = loc.m[r * loc.n + c];
                if v != 0.0 {
                    k.add(globals[r], globals[c], v);
                }
            }
        }
        if let Some(m) = mean {
            let sp = dofs.spaces.get(Field::P);
            let n = element_scalar_dofs(sp, mesh, t, &mut sd);
            let mut integ = [0.0; MAXL];
            for (lam, w) in vol.points.iter().zip(&vol.weights) {
                let mut v = [0.0; MAXL];
                let mut dl = [[0.0; 3]; MAXL];
                sp.eval_into(&tri, *lam, &mut v, &mut dl);
                for i in 0..n {
                    integ[i] += w * area * v[i];
                }
            }
            for i in 0..n {
                let p = dofs.global(Field::P, 0, sd[i]);
                if m.direct != 0.0 {
                    k.add(dofs.multiplier, p, m.direct * integ[i]);
                }
                if m.transpose != 0.0 {
                    k.add(p, dofs.multiplier, m.transpose * integ[i]);
                }
            }
        }
    }
    Ok(k)
}

pub(super) fn rhs(mesh: &Mesh, dofs: &DofMap, wall: &WallData) -> Result<Vec<f64>, AssemblyError> {
    let mut f = vec![0.0; dofs.total];
    let er = edge_quadrature(EDGE_DEGREE)?;
    let mut sd_s = [0usize; MAXL];
    let mut sd_t = [0usize; MAXL];
    let (sp_s, sp_t) = (dofs.spaces.get(Field::S), dofs.spaces.get(Field::Sigma));
    let mut v = [0.0; MAXL];
    let mut dl = [[0.0; 3]; MAXL];
    for be in &mesh.boundary {
        let label = be.label.ok_or(AssemblyError::UnlabeledEdge { edge: be.edge })?;
        let data = wall.walls.get(&label).ok_or(AssemblyError::MissingWallData(label))?;
        let tri = Triangle::new(mesh.triangle_vertices(be.tri))?;
        let ns = element_scalar_dofs(sp_s, mesh, be.tri, &mut sd_s);
        let nt = element_scalar_dofs(sp_t, mesh, be.tri, &mut sd_t);
        let (_, _, ntr) = frame_traces(be.normal, be.tangent);
        for (s, w) in er.points.iter().zip(&er.weights) {
            let lam = edge_lambda(be.local, *s);
            let x = tri.map(lam);
            let ds = w * be.length;
            let (theta, ut) = (data.theta.at(x), data.u_t.at(x));
            if theta != 0.0 {
                sp_s.eval_into(&tri, lam, &mut v, &mut dl);
                for j in 0..ns {
                    for b in 0..2 {
                        f[dofs.global(Field::S, b, sd_s[j])] -= ds * theta * v[j] * be.normal[b];
                    }
                }
            }
            if ut != 0.0 {
                sp_t.eval_into(&tri, lam, &mut v, &mut dl);
                for j in 0..nt {
                    for d in 0..3 {
                        f[dofs.global(Field::Sigma, d, sd_t[j])] -= ds * ut * v[j] * ntr[d];
                    }
                }
            }
        }
    }
    Ok(f)
}
