//! Small-tensor algebra for the moment system.
//!
//! Symmetric and symmetric trace-free projections of second-order tensors,
//! the fully symmetric trace-free projection of third-order tensors, the
//! trace-free 2D→3D embedding, the kernels of `sym ∇` (2D) and `stf ∇` (3D),
//! explicit polynomial right inverses of the divergence on those kernels, and
//! a numeric check of the injectivity of the complex symbol of `stf ∇`.

pub mod poly;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use poly::{Poly, PolyMat, PolyVec};

/// Default seed for every randomized report in this crate.
pub const DEFAULT_SEED: u64 = 0x5213_2024;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("dimension {0} is not supported (expected 2 or 3)")]
    Dimension(usize),
    #[error("{kind} is not in the kernel of the symmetric gradient in 2D")]
    NotInKernel { kind: &'static str },
    #[error("rotation generator is not skew-symmetric")]
    NotSkew,
}

/// `(M + Mᵀ)/2`.
pub fn sym_project<const D: usize>(m: &[[f64; D]; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i])))
}

/// `sym M − (tr M / d) I`.
pub fn stf_project<const D: usize>(m: &[[f64; D]; D]) -> [[f64; D]; D] {
    let tr: f64 = (0..D).map(|i| m[i][i]).sum();
    let mut s = sym_project(m);
    for (i, row) in s.iter_mut().enumerate() {
        row[i] -= tr / D as f64;
    }
    s
}

/// Symmetric 2×2 tensor with a single stored off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius product `σ : τ`.
    pub fn ddot(&self, other: &Self) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }
}

/// Symmetric trace-free 3×3 tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StfTensor3(pub [[f64; 3]; 3]);

impl StfTensor3 {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }
}

/// Trace-free embedding of a planar symmetric tensor: the out-of-plane
/// diagonal entry carries `−(σ11 + σ22)`.
pub fn embed_2d(s: &SymTensor2) -> StfTensor3 {
    StfTensor3([
        [s.xx, s.xy, 0.0],
        [s.xy, s.yy, 0.0],
        [0.0, 0.0, -(s.xx + s.yy)],
    ])
}

/// Dense third-order tensor `m_ijk`, stored with `k` fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderTensor3(pub [f64; 27]);

impl Default for ThirdOrderTensor3 {
    fn default() -> Self {
        Self([0.0; 27])
    }
}

impl ThirdOrderTensor3 {
    #[inline]
    pub fn idx(i: usize, j: usize, k: usize) -> usize {
        9 * i + 3 * j + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[Self::idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.0[Self::idx(i, j, k)] = v;
    }

    /// `a ⊗ b ⊗ c`.
    pub fn outer(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Self {
        let mut t = Self::default();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t.set(i, j, k, a[i] * b[j] * c[k]);
                }
            }
        }
        t
    }

    /// Frobenius pairing over all 27 entries.
    pub fn ddot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Average over the six index permutations, `m_(ijk)`.
    pub fn symmetrize(&self) -> Self {
        let mut t = Self::default();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = self.get(i, j, k)
                        + self.get(j, k, i)
                        + self.get(k, i, j)
                        + self.get(j, i, k)
                        + self.get(i, k, j)
                        + self.get(k, j, i);
                    t.set(i, j, k, v / 6.0);
                }
            }
        }
        t
    }

    /// Largest deviation from full symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(j, i, k),
                        self.get(i, k, j),
                        self.get(k, j, i),
                    ] {
                        d = d.max((v - w).abs());
                    }
                }
            }
        }
        d
    }

    /// Largest trace over any index pair, `max_i |Σ_l m_ill|` and the two
    /// other contractions.
    pub fn trace_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            let a: f64 = (0..3).map(|l| self.get(i, l, l)).sum();
            let b: f64 = (0..3).map(|l| self.get(l, i, l)).sum();
            let c: f64 = (0..3).map(|l| self.get(l, l, i)).sum();
            d = d.max(a.abs()).max(b.abs()).max(c.abs());
        }
        d
    }
}

/// Fully symmetric trace-free part of a third-order tensor:
/// `m_(ijk) − (1/5) Σ_l (m_(ill) δ_jk + m_(ljl) δ_ik + m_(llk) δ_ij)`.
pub fn stf3_project(m: &ThirdOrderTensor3) -> ThirdOrderTensor3 {
    let s = m.symmetrize();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = ThirdOrderTensor3::default();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut corr = 0.0;
                for l in 0..3 {
                    corr += s.get(i, l, l) * delta(j, k)
                        + s.get(l, j, l) * delta(i, k)
                        + s.get(l, l, k) * delta(i, j);
                }
                out.set(i, j, k, s.get(i, j, k) - corr / 5.0);
            }
        }
    }
    out
}

/// Member of the kernel of `𝓔` (sym∇ for d = 2, stf∇ for d = 3).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelField {
    Translation { a: [f64; 3] },
    /// `v = A x` with `A` skew.
    Rotation { generator: [[f64; 3]; 3] },
    Scaling { lambda: f64 },
    /// `v = 2 (b·x) x − |x|² b`.
    SpecialConformal { b: [f64; 3] },
}

impl KernelField {
    pub fn kind(&self) -> &'static str {
        match self {
            KernelField::Translation { .. } => "translation",
            KernelField::Rotation { .. } => "rotation",
            KernelField::Scaling { .. } => "scaling",
            KernelField::SpecialConformal { .. } => "special conformal",
        }
    }

    /// Polynomial representation of the field.
    pub fn as_poly(&self) -> PolyVec {
        let x = poly::position();
        match self {
            KernelField::Translation { a } => std::array::from_fn(|i| Poly::constant(a[i])),
            KernelField::Rotation { generator } => std::array::from_fn(|i| {
                let mut s = Poly::zero();
                for j in 0..3 {
                    s = &s + &x[j].scale(generator[i][j]);
                }
                s
            }),
            KernelField::Scaling { lambda } => std::array::from_fn(|i| x[i].scale(*lambda)),
            KernelField::SpecialConformal { b } => {
                let bp: PolyVec = std::array::from_fn(|i| Poly::constant(b[i]));
                let bx = poly::poly_dot(&bp, &x);
                let xx = poly::poly_dot(&x, &x);
                std::array::from_fn(|i| &(&bx * &x[i]).scale(2.0) - &(&xx * &bp[i]))
            }
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        poly::eval_vec(&self.as_poly(), x)
    }

    /// Exact Jacobian `∂v_i/∂x_j` at `x`.
    pub fn gradient(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let p = self.as_poly();
        std::array::from_fn(|i| std::array::from_fn(|j| p[i].diff(j).eval(x)))
    }

    /// `𝓔 v` at `x`: `sym ∇v` on the planar block for d = 2, `stf ∇v` for d = 3.
    pub fn apply_e(&self, dim: usize, x: [f64; 3]) -> Result<[[f64; 3]; 3], TensorError> {
        let g = self.gradient(x);
        match dim {
            2 => {
                let g2 = [[g[0][0], g[0][1]], [g[1][0], g[1][1]]];
                let s = sym_project(&g2);
                let mut out = [[0.0; 3]; 3];
                for i in 0..2 {
                    for j in 0..2 {
                        out[i][j] = s[i][j];
                    }
                }
                Ok(out)
            }
            3 => Ok(stf_project(&g)),
            d => Err(TensorError::Dimension(d)),
        }
    }
}

/// Spanning set of the kernel of `𝓔`: rigid motions in 2D (dim 3),
/// conformal Killing fields in 3D (dim 10).
pub fn kernel_basis(dim: usize) -> Result<Vec<KernelField>, TensorError> {
    let e = |i: usize| {
        let mut a = [0.0; 3];
        a[i] = 1.0;
        a
    };
    let skew = |i: usize, j: usize| {
        let mut g = [[0.0; 3]; 3];
        g[i][j] = 1.0;
        g[j][i] = -1.0;
        g
    };
    match dim {
        2 => Ok(vec![
            KernelField::Translation { a: e(0) },
            KernelField::Translation { a: e(1) },
            // (x2, −x1)
            KernelField::Rotation { generator: skew(0, 1) },
        ]),
        3 => {
            let mut v: Vec<KernelField> = (0..3).map(|i| KernelField::Translation { a: e(i) }).collect();
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                v.push(KernelField::Rotation { generator: skew(i, j) });
            }
            v.push(KernelField::Scaling { lambda: 1.0 });
            v.extend((0..3).map(|i| KernelField::SpecialConformal { b: e(i) }));
            Ok(v)
        }
        d => Err(TensorError::Dimension(d)),
    }
}

/// Polynomial symmetric tensor field `σ̂` with `∇·σ̂ = v` for a kernel field
/// `v`; trace-free when `dim = 3`.
pub fn divergence_right_inverse(dim: usize, v: &KernelField) -> Result<PolyMat, TensorError> {
    let x = poly::position();
    match dim {
        2 => {
            // v = a (x2, −x1) + b  →  σ̂ = (a x1 x2 + b1 x1) e1⊗e1 + (−a x1 x2 + b2 x2) e2⊗e2
            let (a, b) = match v {
                KernelField::Translation { a } => {
                    if a[2] != 0.0 {
                        return Err(TensorError::NotInKernel { kind: "out-of-plane translation" });
                    }
                    (0.0, [a[0], a[1]])
                }
                KernelField::Rotation { generator } => {
                    check_skew(generator)?;
                    if generator[0][2] != 0.0 || generator[1][2] != 0.0 {
                        return Err(TensorError::NotInKernel { kind: "out-of-plane rotation" });
                    }
                    (generator[0][1], [0.0, 0.0])
                }
                other => return Err(TensorError::NotInKernel { kind: other.kind() }),
            };
            let x1x2 = &x[0] * &x[1];
            let mut m: PolyMat = Default::default();
            m[0][0] = &x1x2.scale(a) + &x[0].scale(b[0]);
            m[1][1] = &x1x2.scale(-a) + &x[1].scale(b[1]);
            Ok(m)
        }
        3 => {
            let vp = v.as_poly();
            Ok(match v {
                KernelField::Translation { .. } => {
                    // (3(a⊗x + x⊗a) − 2(a·x) I) / 10
                    let ax = poly::poly_dot(&vp, &x);
                    let sym = poly::mat_add(&poly::outer(&vp, &x), &poly::outer(&x, &vp));
                    poly::mat_scale(
                        &poly::mat_add(&poly::mat_scale(&sym, 3.0), &poly::scalar_identity(&ax.scale(-2.0))),
                        0.1,
                    )
                }
                KernelField::Rotation { generator } => {
                    check_skew(generator)?;
                    // ((Ax)⊗x + x⊗(Ax)) / 5
                    let sym = poly::mat_add(&poly::outer(&vp, &x), &poly::outer(&x, &vp));
                    poly::mat_scale(&sym, 0.2)
                }
                KernelField::Scaling { lambda } => {
                    // 3λ (x⊗x − |x|² I / 3) / 10
                    let xx = poly::poly_dot(&x, &x);
                    let m = poly::mat_add(&poly::outer(&x, &x), &poly::scalar_identity(&xx.scale(-1.0 / 3.0)));
                    poly::mat_scale(&m, 0.3 * lambda)
                }
                KernelField::SpecialConformal { b } => {
                    // (34 (b·x) x⊗x − 11 |x|² (b⊗x + x⊗b) − 4 |x|² (b·x) I) / 70
                    let bp: PolyVec = std::array::from_fn(|i| Poly::constant(b[i]));
                    let bx = poly::poly_dot(&bp, &x);
                    let xx = poly::poly_dot(&x, &x);
                    let t1 = poly::mat_scale(&poly::outer(&x, &x), 34.0);
                    let t1: PolyMat = std::array::from_fn(|i| std::array::from_fn(|j| &t1[i][j] * &bx));
                    let bsym = poly::mat_add(&poly::outer(&bp, &x), &poly::outer(&x, &bp));
                    let t2: PolyMat = std::array::from_fn(|i| std::array::from_fn(|j| &bsym[i][j] * &xx.scale(-11.0)));
                    let t3 = poly::scalar_identity(&(&xx * &bx).scale(-4.0));
                    poly::mat_scale(&poly::mat_add(&poly::mat_add(&t1, &t2), &t3), 1.0 / 70.0)
                }
            })
        }
        d => Err(TensorError::Dimension(d)),
    }
}

fn check_skew(g: &[[f64; 3]; 3]) -> Result<(), TensorError> {
    for i in 0..3 {
        for j in 0..3 {
            if (g[i][j] + g[j][i]).abs() > 1e-14 {
                return Err(TensorError::NotSkew);
            }
        }
    }
    Ok(())
}

/// One sampled frequency of the symbol check.
#[derive(Debug, Clone)]
pub struct SymbolTrial {
    /// Real and imaginary parts of ξ.
    pub xi_re: Vec<f64>,
    pub xi_im: Vec<f64>,
    pub min_singular_value: f64,
    /// Right singular vector for the smallest singular value, as a complex
    /// vector `(re, im)`.
    pub null_re: Vec<f64>,
    pub null_im: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SymbolReport {
    pub dim: usize,
    pub trials: Vec<SymbolTrial>,
    /// True when some trial's smallest singular value fell below 1e-12.
    pub counterexample_found: bool,
}

impl SymbolReport {
    pub fn min_singular_value(&self) -> f64 {
        self.trials.iter().map(|t| t.min_singular_value).fold(f64::INFINITY, f64::min)
    }
}

/// Threshold below which a symbol evaluation is reported singular.
pub const SYMBOL_SINGULAR_TOL: f64 = 1e-12;

/// Smallest singular value of `v ↦ stf(v ⊗ ξ)` for one complex frequency,
/// computed on the realified map `ℝ^{2d} → ℝ^{2d²}`.
pub fn symbol_min_singular(dim: usize, xi_re: &[f64], xi_im: &[f64]) -> Result<SymbolTrial, TensorError> {
    if dim != 2 && dim != 3 {
        return Err(TensorError::Dimension(dim));
    }
    let d = dim;
    // stf(v⊗ξ)_ij = (v_i ξ_j + v_j ξ_i)/2 − δ_ij (v·ξ)/d, linear in v.
    let mut m = Mat::<f64>::zeros(2 * d * d, 2 * d);
    for col in 0..2 * d {
        // basis vector: real unit (col < d) or imaginary unit
        let (k, imag) = (col % d, col >= d);
        for i in 0..d {
            for j in 0..d {
                let mut re = 0.0;
                let mut im = 0.0;
                // v = e_k (times 1 or i)
                let mut add = |vi: f64, xr: f64, xim: f64, w: f64| {
                    // (vi_re + i vi_im) * (xr + i xim), vi is real-valued factor times (1 or i)
                    if imag {
                        re += -w * vi * xim;
                        im += w * vi * xr;
                    } else {
                        re += w * vi * xr;
                        im += w * vi * xim;
                    }
                };
                let vi = if i == k { 1.0 } else { 0.0 };
                let vj = if j == k { 1.0 } else { 0.0 };
                add(vi, xi_re[j], xi_im[j], 0.5);
                add(vj, xi_re[i], xi_im[i], 0.5);
                if i == j {
                    add(1.0, xi_re[k], xi_im[k], -1.0 / d as f64);
                }
                m[(i * d + j, col)] = re;
                m[(d * d + i * d + j, col)] = im;
            }
        }
    }
    let svd = m.svd().expect("svd of a small dense matrix");
    let s = svd.S().column_vector();
    let last = 2 * d - 1;
    let v = svd.V();
    Ok(SymbolTrial {
        xi_re: xi_re.to_vec(),
        xi_im: xi_im.to_vec(),
        min_singular_value: s[last],
        null_re: (0..d).map(|i| v[(i, last)]).collect(),
        null_im: (0..d).map(|i| v[(d + i, last)]).collect(),
    })
}

/// Samples `trials` frequencies uniformly on the complex unit sphere and
/// records the smallest singular value of the symbol at each.
pub fn symbol_injectivity_check(dim: usize, trials: usize, seed: u64) -> Result<SymbolReport, TensorError> {
    if dim != 2 && dim != 3 {
        return Err(TensorError::Dimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut z: Vec<f64> = (0..2 * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        z.iter_mut().for_each(|v| *v /= n);
        out.push(symbol_min_singular(dim, &z[..dim], &z[dim..])?);
    }
    let counterexample_found = out.iter().any(|t| t.min_singular_value < SYMBOL_SINGULAR_TOL);
    Ok(SymbolReport { dim, trials: out, counterexample_found })
}

/// The planar counterexample ξ = (i, −1) with its singular direction.
pub fn planar_counterexample() -> SymbolTrial {
    symbol_min_singular(2, &[0.0, -1.0], &[1.0, 0.0]).expect("d = 2 is supported")
}
