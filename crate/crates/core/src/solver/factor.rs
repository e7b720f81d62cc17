//! Sparse factorizations of the equilibrated matrix `K̂ = D K D`.
//!
//! Two backends: partial-pivoting LU for general matrices, and a
//! supernodal `LDLᵀ` of the symmetrized matrix `J K̂` when a row-sign
//! vector `J` with `J K` symmetric is known. The `LDLᵀ` has no pivoting;
//! pivots below `LDLT_DELTA` are replaced by `±LDLT_DELTA` using the sign
//! hints, and accuracy is recovered by refinement against `K`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::SupernodalThreshold;
use faer::{get_global_parallelism, Conj, Mat, Side};

use super::{equilibration, norm2, FactorizationReport, SolveError};
use crate::assembly::CsrMatrix;

const MAX_REFINEMENT: usize = 6;
/// Replacement magnitude for tiny pivots of the symmetric backend.
pub const LDLT_DELTA: f64 = 1e-10;
/// Relative residual below which a refined solve of `K̂` counts as converged
/// inside the condition estimator.
const ESTIMATOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Lu,
    Ldlt,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Lu => "lu",
            Backend::Ldlt => "ldlt",
        }
    }
}

struct SymmetricFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    /// `J`, so that `K̂ = J F̂` with `F̂` the factored matrix.
    row_signs: Vec<f64>,
}

enum Inner {
    Lu(Lu<usize, f64>),
    Ldlt(SymmetricFactor),
}

/// A factored equilibrated square matrix.
pub struct Factorization {
    inner: Inner,
    scale: Vec<f64>,
    scaled: CsrMatrix,
    original: CsrMatrix,
    nonfinite: bool,
    stalled: bool,
}

fn check_square(k: &CsrMatrix) -> Result<(), SolveError> {
    if k.nrows != k.ncols {
        return Err(SolveError::Shape(format!("{}x{} matrix is not square", k.nrows, k.ncols)));
    }
    Ok(())
}

impl Factorization {
    /// Sparse LU with a column fill-reducing ordering.
    pub fn new(k: &CsrMatrix) -> Result<Self, SolveError> {
        check_square(k)?;
        let scale = equilibration(k);
        let scaled = k.scaled(&scale, &scale);
        let lu = scaled.to_faer().sp_lu().map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        Ok(Self { inner: Inner::Lu(lu), scale, scaled, original: k.clone(), nonfinite: false, stalled: false })
    }

    /// Regularized `LDLᵀ` of `J K̂` with an AMD ordering. `row_signs` is `J`
    /// (±1, `J K` symmetric); `pivot_signs` are the expected signs of the
    /// pivots of `J K̂`.
    pub fn symmetric(k: &CsrMatrix, row_signs: &[f64], pivot_signs: &[i8]) -> Result<Self, SolveError> {
        check_square(k)?;
        let n = k.nrows;
        if row_signs.len() != n || pivot_signs.len() != n {
            return Err(SolveError::Shape(format!("sign vectors of length {}/{} for dimension {n}", row_signs.len(), pivot_signs.len())));
        }
        let scale = equilibration(k);
        let scaled = k.scaled(&scale, &scale);
        let signed_rows: Vec<f64> = scale.iter().zip(row_signs).map(|(s, j)| s * j).collect();
        let a = k.scaled(&signed_rows, &scale).to_faer();
        let params = CholeskySymbolicParams { supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL, ..Default::default() };
        let symbolic = factorize_symbolic_cholesky(a.symbolic(), Side::Lower, SymmetricOrdering::Amd, params)
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let par = get_global_parallelism();
        let reg = LdltRegularization {
            dynamic_regularization_signs: Some(pivot_signs),
            dynamic_regularization_delta: LDLT_DELTA,
            dynamic_regularization_epsilon: LDLT_DELTA,
        };
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        symbolic
            .factorize_numeric_ldlt(&mut values, a.as_ref(), Side::Lower, reg, par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Factorization("non-finite symmetric factor".into()));
        }
        let inner = Inner::Ldlt(SymmetricFactor { symbolic, values, row_signs: row_signs.to_vec() });
        Ok(Self { inner, scale, scaled, original: k.clone(), nonfinite: false, stalled: false })
    }

    pub fn backend(&self) -> Backend {
        match self.inner {
            Inner::Lu(_) => Backend::Lu,
            Inner::Ldlt(_) => Backend::Ldlt,
        }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn scaled_matrix(&self) -> &CsrMatrix {
        &self.scaled
    }

    /// One application of the factor inverse to `K̂ y = c` (or `K̂ᵀ`).
    fn raw_solve(&self, c: &[f64], transpose: bool) -> Vec<f64> {
        let n = c.len();
        match &self.inner {
            Inner::Lu(lu) => {
                let mut m = Mat::from_fn(n, 1, |i, _| c[i]);
                if transpose {
                    lu.solve_transpose_in_place(m.as_mut());
                } else {
                    lu.solve_in_place(m.as_mut());
                }
                (0..n).map(|i| m[(i, 0)]).collect()
            }
            Inner::Ldlt(f) => {
                // K̂⁻¹ = F̂⁻¹ J and K̂⁻ᵀ = J F̂⁻¹
                let j = &f.row_signs;
                let mut m = Mat::from_fn(n, 1, |i, _| if transpose { c[i] } else { j[i] * c[i] });
                let par = get_global_parallelism();
                let mut mem = MemBuffer::new(f.symbolic.solve_in_place_scratch::<f64>(1, par));
                faer::sparse::linalg::cholesky::LdltRef::new(&f.symbolic, &f.values).solve_in_place_with_conj(
                    Conj::No,
                    m.as_mut(),
                    par,
                    MemStack::new(&mut mem),
                );
                (0..n).map(|i| if transpose { j[i] * m[(i, 0)] } else { m[(i, 0)] }).collect()
            }
        }
    }

    /// Solves the equilibrated system `K̂ y = c`, refined for the symmetric
    /// backend.
    pub fn solve_scaled(&mut self, c: &[f64]) -> Vec<f64> {
        match self.inner {
            Inner::Lu(_) => self.raw_solve(c, false),
            Inner::Ldlt(_) => self.refined_scaled(c, false).0,
        }
    }

    /// Refined solve of `K̂ y = c` or `K̂ᵀ y = c`; returns the iterate and
    /// its relative residual.
    fn refined_scaled(&mut self, c: &[f64], transpose: bool) -> (Vec<f64>, f64) {
        let nc = norm2(c);
        let mut y = vec![0.0; c.len()];
        if nc == 0.0 {
            return (y, 0.0);
        }
        let mut r = c.to_vec();
        let mut best = (y.clone(), 1.0);
        for _ in 0..=MAX_REFINEMENT {
            let dy = self.raw_solve(&r, transpose);
            if dy.iter().any(|v| !v.is_finite()) {
                self.nonfinite = true;
                return (best.0, f64::INFINITY);
            }
            for (a, d) in y.iter_mut().zip(&dy) {
                *a += d;
            }
            let ky = if transpose { self.scaled.transpose_matvec(&y) } else { self.scaled.matvec(&y) };
            r = c.iter().zip(&ky).map(|(a, b)| a - b).collect();
            let rel = norm2(&r) / nc;
            let improved = rel < 0.5 * best.1;
            if rel < best.1 {
                best = (y.clone(), rel);
            }
            if !improved || rel < 1e-15 {
                break;
            }
        }
        best
    }

    /// Solves `K x = b` with iterative refinement on the original matrix.
    pub fn solve(&mut self, b: &[f64]) -> (Vec<f64>, usize) {
        let n = self.dim();
        let nb = norm2(b);
        let mut x = vec![0.0; n];
        if nb == 0.0 {
            return (x, 0);
        }
        let mut r = b.to_vec();
        let mut best = (x.clone(), f64::INFINITY);
        let mut steps = 0;
        for it in 0..=MAX_REFINEMENT {
            let c: Vec<f64> = r.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
            let y = self.raw_solve(&c, false);
            if y.iter().any(|v| !v.is_finite()) {
                self.nonfinite = true;
                break;
            }
            for i in 0..n {
                x[i] += self.scale[i] * y[i];
            }
            let kx = self.original.matvec(&x);
            r = b.iter().zip(&kx).map(|(a, b)| a - b).collect();
            let rel = norm2(&r) / nb;
            steps = it;
            if rel < best.1 {
                best = (x.clone(), rel);
            } else {
                break;
            }
            if rel < 1e-14 {
                break;
            }
        }
        (best.0, steps)
    }

    /// Applies `K̂⁻¹` or `K̂⁻ᵀ` inside the estimator; the symmetric backend
    /// uses refined solves and flags a stall when they do not converge.
    fn inverse(&mut self, c: &[f64], transpose: bool) -> Option<Vec<f64>> {
        let y = match self.inner {
            Inner::Lu(_) => self.raw_solve(c, transpose),
            Inner::Ldlt(_) => {
                let (y, rel) = self.refined_scaled(c, transpose);
                if !(rel <= ESTIMATOR_TOL) {
                    if rel.is_finite() {
                        self.stalled = true;
                    }
                    return None;
                }
                y
            }
        };
        if y.iter().any(|v| !v.is_finite()) {
            self.nonfinite = true;
            return None;
        }
        Some(y)
    }

    /// Hager–Higham estimate of the equilibrated 1-norm condition number;
    /// infinite when an inverse application fails.
    pub fn condition_estimate(&mut self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let mut colsum = vec![0.0; n];
        for (_, j, v) in self.scaled.triplets() {
            colsum[j] += v.abs();
        }
        let norm_a = colsum.into_iter().fold(0.0f64, f64::max);
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0f64;
        for _ in 0..5 {
            let Some(y) = self.inverse(&x, false) else { return f64::INFINITY };
            est = y.iter().map(|v| v.abs()).sum();
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let Some(z) = self.inverse(&xi, true) else { return f64::INFINITY };
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bm), (j, v)| if v.abs() > bm { (j, v.abs()) } else { (bj, bm) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let Some(y) = self.inverse(&alt, false) else { return f64::INFINITY };
        let est2 = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        norm_a * est.max(est2)
    }

    /// A refined solve inside the condition estimator failed to converge.
    pub fn stalled(&self) -> bool {
        self.stalled
    }

    pub fn report(&mut self, steps: usize) -> FactorizationReport {
        let condition_estimate = self.condition_estimate();
        let lo = self.scale.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.scale.iter().copied().fold(0.0, f64::max);
        FactorizationReport {
            dim: self.dim(),
            nnz: self.original.nnz(),
            condition_estimate,
            nonfinite: self.nonfinite,
            refinement_steps: steps,
            scaling_range: (lo, hi),
            backend: self.backend(),
        }
    }
}
